#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <vector>

#include "helpers.hpp"
#include "lfrr/checkpoint.hpp"
#include "lfrr/lfd_io.hpp"
#include "lfrr/png_io.hpp"
#include "lfrr/rng.hpp"

using namespace lfrr;
using testutil::ScratchDir;

TEST_SUITE("io") {

TEST_CASE("lfd header layout and payload size") {
    ScratchDir dir("lfd");
    Rng rng(1, 0x20);
    LightField lf = testutil::random_lf(2, 2, 3, 3, 3, rng);

    std::string p32 = dir.str("a.lfd");
    write_lfd(p32, lf, LfdDtype::F32);
    auto bytes = testutil::file_bytes(p32);
    REQUIRE(bytes.size() == 24u + 108u * 4u);  // 24-byte header + f32 payload
    CHECK(std::memcmp(bytes.data(), "LFD1", 4) == 0);
    CHECK(bytes[4] == 0);  // dtype f32
    CHECK(bytes[5] == 3);  // channels
    CHECK(bytes[6] == 0);
    CHECK(bytes[7] == 0);
    auto u32at = [&](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off]) |
               (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
               (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
               (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
    };
    CHECK(u32at(8) == 2);
    CHECK(u32at(12) == 2);
    CHECK(u32at(16) == 3);
    CHECK(u32at(20) == 3);

    std::string p64 = dir.str("b.lfd");
    write_lfd(p64, lf, LfdDtype::F64);
    CHECK(testutil::file_bytes(p64).size() == 24u + 108u * 8u);
}

TEST_CASE("lfd round trip is exact at f64 and float-quantized at f32") {
    ScratchDir dir("lfd_rt");
    Rng rng(2, 0x21);
    LightField lf = testutil::random_lf(2, 3, 4, 5, 3, rng);

    write_lfd(dir.str("x64.lfd"), lf, LfdDtype::F64);
    LightField r64 = read_lfd(dir.str("x64.lfd"));
    CHECK(r64.same_dims(lf));
    CHECK(r64.data() == lf.data());

    write_lfd(dir.str("x32.lfd"), lf, LfdDtype::F32);
    LightField r32 = read_lfd(dir.str("x32.lfd"));
    REQUIRE(r32.same_dims(lf));
    for (std::size_t i = 0; i < lf.data().size(); ++i)
        CHECK(r32.data()[i] == static_cast<double>(static_cast<float>(lf.data()[i])));
}

TEST_CASE("lfd rejects corrupt files by failure kind") {
    ScratchDir dir("lfd_bad");
    LightField lf(1, 1, 2, 2, 1, {0.0, 0.25, 0.5, 1.0});
    std::string good = dir.str("good.lfd");
    write_lfd(good, lf, LfdDtype::F64);
    auto bytes = testutil::file_bytes(good);

    auto variant = [&](const std::string& name, auto mutate) {
        auto b = bytes;
        mutate(b);
        std::string p = dir.str(name);
        testutil::write_bytes(p, b);
        return p;
    };

    CHECK_THROWS_AS(read_lfd(variant("magic.lfd",
                                     [](auto& b) { std::memcpy(b.data(), "XXXX", 4); })),
                    BadMagic);
    CHECK_THROWS_AS(read_lfd(variant("rev.lfd", [](auto& b) { b[3] = '2'; })), BadVersion);
    CHECK_THROWS_AS(read_lfd(variant("dtype.lfd", [](auto& b) { b[4] = 7; })), BadVersion);
    CHECK_THROWS_AS(read_lfd(variant("short.lfd", [](auto& b) { b.resize(b.size() - 9); })),
                    TruncatedFile);
    CHECK_THROWS_AS(read_lfd(variant("stub.lfd", [](auto& b) { b.resize(10); })),
                    TruncatedFile);
    CHECK_THROWS_AS(read_lfd(variant("zero.lfd", [](auto& b) { b[16] = b[17] = 0; })),
                    DimensionOverflow);
    // payload value outside [0,1]
    CHECK_THROWS_AS(read_lfd(variant("range.lfd",
                                     [](auto& b) {
                                         double v = 1.5;
                                         std::memcpy(b.data() + 24, &v, sizeof v);
                                     })),
                    ValueOutOfRange);
    CHECK_THROWS_AS(read_lfd(dir.str("missing.lfd")), IoError);
}

TEST_CASE("png mosaic maps views to tiles and quantizes to 8 bits") {
    ScratchDir dir("png");
    // distinct constant per view, on the 8-bit grid so the trip is exact
    std::int64_t U = 2, V = 3, X = 4, Y = 5;
    LightField lf = LightField::zeros(U, V, X, Y, 3);
    for (std::int64_t u = 0; u < U; ++u)
        for (std::int64_t v = 0; v < V; ++v)
            for (std::int64_t x = 0; x < X; ++x)
                for (std::int64_t y = 0; y < Y; ++y)
                    for (std::int64_t c = 0; c < 3; ++c)
                        lf.at(u, v, x, y, c) = static_cast<double>((u * V + v) * 3 + c) / 255.0;

    std::string p = dir.str("m.png");
    write_png_mosaic(p, lf);
    LightField back = read_png_mosaic(p, U, V);
    REQUIRE(back.same_dims(lf));
    CHECK(back.data() == lf.data());

    // image rows = U*X, so reading with a swapped grid cannot divide evenly
    CHECK_THROWS_AS(read_png_mosaic(p, 3, 2), DimensionMismatch);

    // 0.5 rounds to byte 128
    LightField half(1, 1, 1, 1, 1, {0.5});
    write_png_mosaic(dir.str("half.png"), half);
    LightField h = read_png_mosaic(dir.str("half.png"), 1, 1);
    CHECK(h.at(0, 0, 0, 0, 0) == 128.0 / 255.0);

    CHECK_THROWS_AS(write_png_mosaic(dir.str("c2.png"), LightField(1, 1, 1, 1, 2, {0.1, 0.2})),
                    ChannelMismatch);
    testutil::write_bytes(dir.str("fake.png"), {'n', 'o', 't', 'p', 'n', 'g', '!', '!'});
    CHECK_THROWS_AS(read_png_mosaic(dir.str("fake.png"), 1, 1), BadMagic);
}

TEST_CASE("png round trip error stays within half a quantization step") {
    ScratchDir dir("png_q");
    Rng rng(3, 0x22);
    LightField lf = testutil::random_lf(2, 2, 6, 6, 3, rng);
    write_png_mosaic(dir.str("q.png"), lf);
    LightField back = read_png_mosaic(dir.str("q.png"), 2, 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < lf.data().size(); ++i)
        worst = std::max(worst, std::fabs(back.data()[i] - lf.data()[i]));
    CHECK(worst <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("checkpoint round trip restores every tensor bit for bit") {
    ScratchDir dir("ckpt");
    ModelConfig cfg{4, 1, 1, 2, true};
    ModelParams p = init_model_params(cfg, 99);
    std::string cfg_text = "model.c=4\nmodel.m=1\nmodel.n=1\nmodel.r=2\n";
    std::string path = dir.str("m.ckpt");
    write_checkpoint(path, p, cfg_text);

    CheckpointData data = read_checkpoint(path);
    CHECK(data.config_text == cfg_text);
    ModelParams q = load_model_params(cfg, data);

    std::vector<std::pair<std::string, const Tensor*>> a, b;
    visit_params(p, [&](const std::string& n, const Tensor& t) { a.emplace_back(n, &t); });
    visit_params(q, [&](const std::string& n, const Tensor& t) { b.emplace_back(n, &t); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(*a[i].second->data == *b[i].second->data);
    }

    // loading under a mismatched layout is refused
    CHECK_THROWS_AS(load_model_params(ModelConfig{8, 1, 1, 2, true}, data), ConfigMismatch);
    CHECK_THROWS_AS(load_model_params(ModelConfig{4, 2, 1, 2, true}, data), ConfigMismatch);
}

TEST_CASE("checkpoint rejects corrupt files by failure kind") {
    ScratchDir dir("ckpt_bad");
    ModelConfig cfg{4, 1, 1, 2, true};
    ModelParams p = init_model_params(cfg, 5);
    std::string good = dir.str("good.ckpt");
    write_checkpoint(good, p, "model.c=4\n");
    auto bytes = testutil::file_bytes(good);

    auto variant = [&](const std::string& name, auto mutate) {
        auto b = bytes;
        mutate(b);
        std::string path = dir.str(name);
        testutil::write_bytes(path, b);
        return path;
    };

    CHECK_THROWS_AS(read_checkpoint(variant("magic.ckpt",
                                            [](auto& b) { std::memcpy(b.data(), "WXYZ", 4); })),
                    BadMagic);
    CHECK_THROWS_AS(read_checkpoint(variant("rev.ckpt", [](auto& b) { b[4] = '9'; })),
                    BadVersion);
    CHECK_THROWS_AS(read_checkpoint(variant("cut.ckpt",
                                            [](auto& b) { b.resize(b.size() / 2); })),
                    TruncatedFile);
    CHECK_THROWS_AS(read_checkpoint(dir.str("missing.ckpt")), IoError);
}

}  // TEST_SUITE
