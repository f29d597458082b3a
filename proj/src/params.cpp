#include "ctxens/params.hpp"

#include <charconv>
#include <cstdlib>

#include "ctxens/error.hpp"

namespace ctxens {

namespace {

const std::string* lookup(const ParamMap& params, const std::string& key) {
    auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
    fail(ErrorCode::ConfigInvalid, "parameter '" + key + "' = '" + value + "' is not " + what);
}

}  // namespace

double param_double(const ParamMap& params, const std::string& key, double fallback) {
    const auto* v = lookup(params, key);
    if (v == nullptr) return fallback;
    char* end = nullptr;
    const double out = std::strtod(v->c_str(), &end);
    if (v->empty() || end != v->c_str() + v->size()) bad(key, *v, "a real number");
    return out;
}

int param_int(const ParamMap& params, const std::string& key, int fallback) {
    const auto* v = lookup(params, key);
    if (v == nullptr) return fallback;
    int out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) bad(key, *v, "an integer");
    return out;
}

std::uint64_t param_u64(const ParamMap& params, const std::string& key, std::uint64_t fallback) {
    const auto* v = lookup(params, key);
    if (v == nullptr) return fallback;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) bad(key, *v, "a nonnegative integer");
    return out;
}

bool param_bool(const ParamMap& params, const std::string& key, bool fallback) {
    const auto* v = lookup(params, key);
    if (v == nullptr) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    bad(key, *v, "a boolean");
}

}  // namespace ctxens
