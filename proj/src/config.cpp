#include "ctxens/config.hpp"

#include <charconv>
#include <set>

#include "ctxens/io.hpp"

namespace ctxens::config {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad(std::size_t line, const std::string& msg) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_integer(std::string_view v, std::size_t line, std::string_view key) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad(line, "'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
}

double parse_real(std::string_view v, std::size_t line, std::string_view key) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad(line, "'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
    }
    return out;
}

std::vector<std::string> parse_list(std::string_view v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        auto comma = v.find(',', start);
        if (comma == std::string_view::npos) comma = v.size();
        const auto item = trim(v.substr(start, comma - start));
        if (!item.empty()) out.emplace_back(item);
        start = comma + 1;
    }
    return out;
}

std::vector<int> parse_int_list(std::string_view v, std::size_t line, std::string_view key) {
    std::vector<int> out;
    for (const auto& item : parse_list(v)) out.push_back(parse_integer<int>(item, line, key));
    return out;
}

enum class Section { None, Data, Split, Base, Meta, Run };

}  // namespace

pipeline::ExperimentConfig parse(std::string_view text) {
    pipeline::ExperimentConfig cfg;
    Section section = Section::None;
    std::set<std::string> seen_keys;
    std::set<std::string> seen_sections;
    bool have_split[3] = {false, false, false};
    std::optional<std::string> source;
    std::size_t line_no = 0;
    std::size_t start = 0;

    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        ++line_no;

        if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') bad(line_no, "unterminated section header");
            const auto header = trim(line.substr(1, line.size() - 2));
            std::string key(header);
            if (header == "data") {
                section = Section::Data;
            } else if (header == "split") {
                section = Section::Split;
            } else if (header == "meta") {
                section = Section::Meta;
            } else if (header == "run") {
                section = Section::Run;
            } else if (header.substr(0, 5) == "base " || header.substr(0, 5) == "base\t") {
                const auto name = trim(header.substr(5));
                if (name.empty()) bad(line_no, "base section needs a name");
                section = Section::Base;
                cfg.bases.emplace_back();
                cfg.bases.back().name = std::string(name);
                key = "base " + std::string(name);
            } else {
                bad(line_no, "unknown section [" + std::string(header) + "]");
            }
            if (!seen_sections.insert(key).second) bad(line_no, "duplicate section [" + key + "]");
            seen_keys.clear();
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) bad(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) bad(line_no, "empty key");
        if (!seen_keys.insert(key).second) bad(line_no, "duplicate key '" + key + "'");

        try {
            switch (section) {
                case Section::None:
                    bad(line_no, "key outside of any section");
                case Section::Data:
                    if (key == "source") {
                        if (value != "synthetic" && value != "csv") bad(line_no, "source must be synthetic or csv");
                        source = std::string(value);
                        cfg.data.type = value == "csv" ? pipeline::DataSource::Type::Csv
                                                       : pipeline::DataSource::Type::Synthetic;
                    } else if (key == "mix") {
                        cfg.data.synthetic.mix = datagen::parse_mix(value);
                    } else if (key == "length") {
                        cfg.data.synthetic.length = parse_integer<std::size_t>(value, line_no, key);
                    } else if (key == "seed") {
                        cfg.data.synthetic.seed = parse_integer<std::uint64_t>(value, line_no, key);
                    } else if (key == "noise_sigma") {
                        cfg.data.synthetic.noise_sigma = parse_real(value, line_no, key);
                    } else if (key == "path") {
                        cfg.data.csv_path = std::string(value);
                    } else {
                        bad(line_no, "unknown key '" + key + "' in [data]");
                    }
                    break;
                case Section::Split: {
                    std::size_t* target = nullptr;
                    if (key == "t1") target = &cfg.split.t1, have_split[0] = true;
                    else if (key == "t_end") target = &cfg.split.t_end, have_split[1] = true;
                    else if (key == "t2") target = &cfg.split.t2, have_split[2] = true;
                    else bad(line_no, "unknown key '" + key + "' in [split]");
                    *target = parse_integer<std::size_t>(value, line_no, key);
                    break;
                }
                case Section::Base: {
                    auto& b = cfg.bases.back();
                    if (key == "kind") b.kind = base::parse_base_kind(value);
                    else if (key == "lags") b.lags = parse_int_list(value, line_no, key);
                    else if (key == "exog") b.exog_columns = parse_list(value);
                    else b.hyperparams[key] = std::string(value);
                    break;
                }
                case Section::Meta:
                    if (key == "kind") cfg.meta = pipeline::parse_meta_kind(value);
                    else if (key == "constraint") cfg.constraint = parse_constraint(value);
                    else if (key == "extras") cfg.extras = parse_list(value);
                    else if (key == "onehot") cfg.onehot = parse_list(value);
                    else cfg.meta_hyperparams[key] = std::string(value);
                    break;
                case Section::Run:
                    if (key == "seed") cfg.seed = parse_integer<std::uint64_t>(value, line_no, key);
                    else if (key == "output_dir") cfg.output_dir = std::string(value);
                    else bad(line_no, "unknown key '" + key + "' in [run]");
                    break;
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ParseError) throw;
            bad(line_no, e.detail());
        }
    }

    if (!seen_sections.contains("meta")) fail(ErrorCode::ParseError, "missing [meta] section");
    if (cfg.data.type == pipeline::DataSource::Type::Csv && cfg.data.csv_path.empty()) {
        fail(ErrorCode::ParseError, "[data] source = csv needs a path");
    }
    if (cfg.data.type == pipeline::DataSource::Type::Synthetic) {
        // 530/630/730-style default when the split is omitted.
        const std::size_t n = cfg.data.synthetic.length;
        if (!have_split[0] && !have_split[1] && !have_split[2] && n >= 300) {
            cfg.split = SplitSpec{n - 200, n - 100, n};
            have_split[0] = have_split[1] = have_split[2] = true;
        }
    }
    if (!(have_split[0] && have_split[1] && have_split[2])) {
        fail(ErrorCode::ParseError, "[split] needs t1, t_end and t2");
    }
    cfg.validate();
    return cfg;
}

pipeline::ExperimentConfig parse_file(const std::filesystem::path& path) {
    pipeline::ExperimentConfig cfg;
    try {
        cfg = parse(io::read_file(path));
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.detail());
    }
    if (cfg.data.type == pipeline::DataSource::Type::Csv) {
        const std::filesystem::path p(cfg.data.csv_path);
        if (p.is_relative()) cfg.data.csv_path = (path.parent_path() / p).lexically_normal().string();
    }
    return cfg;
}

}  // namespace ctxens::config
