#include "ctxens/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace ctxens::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
    const auto where = [&] { return "line " + std::to_string(line_no) + ", column '" + std::string(column) + "'"; };
    if (field.empty()) fail(ErrorCode::ParseError, "missing value at " + where());
    if (field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        fail(ErrorCode::ParseError, "cannot parse '" + std::string(field) + "' at " + where());
    }
    if (!std::isfinite(v)) fail(ErrorCode::ParseError, "non-finite value at " + where());
    return v;
}

}  // namespace

TimeSeriesFrame parse_frame_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) fail(ErrorCode::ParseError, "empty CSV: header row required");

    const auto header = split_fields(lines[0]);
    std::optional<std::size_t> y_col;
    std::vector<std::string> side_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j].empty()) fail(ErrorCode::ParseError, "line 1: empty column name");
        if (header[j] == "y") {
            if (y_col) fail(ErrorCode::ParseError, "line 1: duplicate 'y' column");
            y_col = j;
        } else {
            side_names.emplace_back(header[j]);
        }
    }
    if (!y_col) fail(ErrorCode::ParseError, "line 1: no 'y' column");
    if (lines.size() < 2) fail(ErrorCode::EmptyData, "CSV has a header but no rows");

    const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
    std::vector<double> y(static_cast<std::size_t>(rows));
    Matrix side(rows, static_cast<Eigen::Index>(side_names.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t line_no = static_cast<std::size_t>(r) + 2;
        const auto fields = split_fields(lines[static_cast<std::size_t>(r) + 1]);
        if (fields.size() != header.size()) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                            std::to_string(header.size()) + " fields, got " +
                                            std::to_string(fields.size()));
        }
        Eigen::Index c = 0;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const double v = parse_number(fields[j], line_no, header[j]);
            if (j == *y_col) {
                y[static_cast<std::size_t>(r)] = v;
            } else {
                side(r, c++) = v;
            }
        }
    }
    try {
        return TimeSeriesFrame(std::move(y), FeatureTable(std::move(side_names), std::move(side)));
    } catch (const Error& e) {
        fail(ErrorCode::ParseError, e.detail());
    }
}

TimeSeriesFrame read_frame_csv(const std::filesystem::path& path) { return parse_frame_csv(read_file(path)); }

std::string format_real(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) fail(ErrorCode::NonFiniteValue, "cannot format value");
    return std::string(buf.data(), ptr);
}

std::string format_frame_csv(const TimeSeriesFrame& frame) {
    std::string out = "y";
    const auto& side = frame.side_info();
    for (const auto& n : side.names) out += "," + n;
    out += '\n';
    for (std::size_t r = 0; r < frame.length(); ++r) {
        out += format_real(frame.values()[r]);
        for (Eigen::Index c = 0; c < side.cols(); ++c) {
            out += ',';
            out += format_real(side.values(static_cast<Eigen::Index>(r), c));
        }
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot open " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot rename into " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace ctxens::io
