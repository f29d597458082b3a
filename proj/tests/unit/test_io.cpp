#include <doctest.h>

#include <filesystem>
#include <random>

#include "ctxens/datagen.hpp"
#include "ctxens/io.hpp"
#include "test_util.hpp"

using namespace ctxens;

namespace {

std::string parse_message(std::string_view text) {
    try {
        (void)io::parse_frame_csv(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("csv parsing") {
    const auto f = io::parse_frame_csv("mod2,y,lag1\n0,1.5,2\n1,-3e2,4\n");
    CHECK(f.values() == std::vector<double>{1.5, -300.0});
    CHECK(f.side_info().names == std::vector<std::string>{"mod2", "lag1"});
    CHECK(f.side_info().values(1, 1) == 4.0);
    const auto crlf = io::parse_frame_csv("y\r\n1\r\n2\r\n\r\n");
    CHECK(crlf.length() == 2);
}

TEST_CASE("csv errors name the line") {
    CHECK(parse_message("y,a\n1,2\n3,\n").find("line 3") != std::string::npos);
    CHECK(parse_message("y,a\n1,2\n3,x\n").find("line 3") != std::string::npos);
    CHECK(parse_message("y,a\n1,2,3\n").find("line 2") != std::string::npos);
    CHECK(parse_message("y,a\n1,nan\n").find("non-finite") != std::string::npos);
    CHECK_ERROR(io::parse_frame_csv("a,b\n1,2\n"), ErrorCode::ParseError);
    CHECK_ERROR(io::parse_frame_csv(""), ErrorCode::ParseError);
    CHECK_ERROR(io::parse_frame_csv("y,a,a\n1,2,3\n"), ErrorCode::ParseError);
    CHECK_ERROR(io::parse_frame_csv("y\n"), ErrorCode::EmptyData);
}

TEST_CASE("csv round trip is exact") {
    datagen::SyntheticSpec spec;
    spec.mix = datagen::MixKind::B;
    spec.seed = 3;
    const auto frame = datagen::generate(spec, true).frame;
    const auto text = io::format_frame_csv(frame);
    CHECK(io::parse_frame_csv(text) == frame);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
        const double v = u(rng) * std::pow(10.0, k % 20 - 10);
        const auto s = io::format_real(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("atomic writes and checksums") {
    const auto dir = std::filesystem::temp_directory_path() / "ctxens_io_test";
    std::filesystem::remove_all(dir);
    const auto path = dir / "nested" / "file.txt";
    io::write_file_atomic(path, "hello");
    CHECK(io::read_file(path) == "hello");
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    io::write_file_atomic(path, "bye");
    CHECK(io::read_file(path) == "bye");
    std::filesystem::remove_all(dir);

    CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(io::hex64(0xabcULL) == "0000000000000abc");
    CHECK_ERROR(io::read_file(dir / "missing"), ErrorCode::IoError);
}
