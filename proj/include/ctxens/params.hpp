#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ctxens {

using ParamMap = std::map<std::string, std::string>;

// Typed lookups with defaults; malformed values raise ConfigInvalid.
double param_double(const ParamMap& params, const std::string& key, double fallback);
int param_int(const ParamMap& params, const std::string& key, int fallback);
std::uint64_t param_u64(const ParamMap& params, const std::string& key, std::uint64_t fallback);
bool param_bool(const ParamMap& params, const std::string& key, bool fallback);

}  // namespace ctxens
