#include <doctest.h>

#include "flowroi/pgm.hpp"
#include "test_util.hpp"

using namespace flowroi;

TEST_CASE("pgm round-trips 8-bit frames bit-exactly") {
    testutil::TempDir dir("pgm8");
    const Frame f = testutil::random_frame(37, 23, 8, 101);
    save_frame(f, dir.file("a.pgm"));
    const Frame g = load_pgm(dir.file("a.pgm"));
    CHECK(g == f);
}

TEST_CASE("pgm round-trips 16-bit frames big-endian") {
    testutil::TempDir dir("pgm16");
    const Frame f = testutil::random_frame(64, 48, 16, 202);
    save_frame(f, dir.file("a.pgm"));
    const Frame g = load_pgm(dir.file("a.pgm"));
    CHECK(g == f);
    CHECK(g.depth == 16);

    // spot-check the byte order: maxval line then MSB-first samples
    std::ifstream in(dir.file("a.pgm"), std::ios::binary);
    std::string magic, w, h, maxv;
    in >> magic >> w >> h >> maxv;
    CHECK(maxv == "65535");
    in.get();
    const int hi = in.get(), lo = in.get();
    CHECK(((hi << 8) | lo) == f.pixels[0]);
}

TEST_CASE("pbm mask round-trip") {
    testutil::TempDir dir("pbm");
    const RoiMask m = testutil::random_mask(41, 17, 0.3, 7);
    save_pbm(m, dir.file("m.pbm"));
    CHECK(load_pbm(dir.file("m.pbm")) == m);
}

TEST_CASE("save to an unwritable path raises an I/O error") {
    testutil::TempDir dir("badpath");
    const Frame f(8, 8, 8);
    CHECK_THROWS_AS(save_frame(f, dir.str()), data_error);  // path is a directory
}

TEST_CASE("load_sequence orders frames lexicographically") {
    testutil::TempDir dir("seq");
    for (int i = 0; i < 50; ++i) {
        Frame f(16, 16, 8, std::uint16_t(i));
        save_frame(f, dir.file(frame_name(i, ".pgm")));
    }
    const Sequence seq = load_sequence(dir.str());
    REQUIRE(seq.size() == 50);
    for (int i = 0; i < 50; ++i) CHECK(seq[i].pixels[0] == i);
}

TEST_CASE("load_sequence rejects mixed dimensions") {
    testutil::TempDir dir("mixed");
    save_frame(Frame(32, 32, 8), dir.file("000000.pgm"));
    save_frame(Frame(16, 16, 8), dir.file("000001.pgm"));
    CHECK_THROWS_AS(load_sequence(dir.str()), data_error);
}

TEST_CASE("load_sequence rejects empty and missing directories") {
    testutil::TempDir dir("empty");
    CHECK_THROWS_AS(load_sequence(dir.str()), data_error);
    CHECK_THROWS_AS(load_sequence(dir.file("nope")), data_error);
}

TEST_CASE("pgm rejects unsupported maxval") {
    testutil::TempDir dir("maxval");
    std::ofstream out(dir.file("a.pgm"), std::ios::binary);
    out << "P5\n4 4\n1023\n";
    for (int i = 0; i < 32; ++i) out.put(char(i));
    out.close();
    CHECK_THROWS_AS(load_pgm(dir.file("a.pgm")), data_error);
}

TEST_CASE("pgm header comments are skipped") {
    testutil::TempDir dir("comments");
    std::ofstream out(dir.file("a.pgm"), std::ios::binary);
    out << "P5\n# a comment\n2 2\n# another\n255\n";
    out.write("\x01\x02\x03\x04", 4);
    out.close();
    const Frame f = load_pgm(dir.file("a.pgm"));
    CHECK(f.width == 2);
    CHECK(f.pixels == std::vector<std::uint16_t>{1, 2, 3, 4});
}
