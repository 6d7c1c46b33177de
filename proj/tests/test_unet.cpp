#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wcad/eval.hpp"
#include "wcad/unet.hpp"

using namespace wcad;
using namespace wcad::test;

namespace {

UNetConfig small_cfg() {
    UNetConfig cfg;
    cfg.base_channels = 8;
    cfg.channel_mults = {1, 2};
    cfg.time_embed_dim = 16;
    cfg.cond_embed_dim = 16;
    cfg.groups = 4;
    return cfg;
}

}  // namespace

TEST_CASE("time_embedding: t=0 gives sin 0 / cos 1 pairs") {
    Tensor e = time_embedding(0, 8);
    for (int j = 0; j < 4; ++j) {
        CHECK(e.data()[2 * j] == 0.0f);
        CHECK(e.data()[2 * j + 1] == 1.0f);
    }
    CHECK_THROWS_AS(time_embedding(3, 7), ShapeError);
}

TEST_CASE("time_embedding: norm is identical for all t") {
    auto norm = [](const Tensor& t) {
        double acc = 0.0;
        for (size_t i = 0; i < t.numel(); ++i) acc += static_cast<double>(t.data()[i]) * t.data()[i];
        return std::sqrt(acc);
    };
    double n0 = norm(time_embedding(0, 32));
    for (int t : {1, 7, 100, 999}) {
        CHECK(norm(time_embedding(t, 32)) == doctest::Approx(n0).epsilon(1e-6));
    }
}

TEST_CASE("time_embedding: t=7 dim=4 matches the two-frequency hand computation") {
    Tensor e = time_embedding(7, 4);
    // omega_0 = 1, omega_1 = 1e-4
    CHECK(e.data()[0] == doctest::Approx(std::sin(7.0)).epsilon(1e-6));
    CHECK(e.data()[1] == doctest::Approx(std::cos(7.0)).epsilon(1e-6));
    CHECK(e.data()[2] == doctest::Approx(std::sin(7.0e-4)).epsilon(1e-6));
    CHECK(e.data()[3] == doctest::Approx(std::cos(7.0e-4)).epsilon(1e-6));
}

TEST_CASE("build_unet: same seed twice gives bit-identical parameters") {
    UNetConfig cfg = small_cfg();
    UNetModel a = build_unet(cfg, 42);
    UNetModel b = build_unet(cfg, 42);
    REQUIRE(a.params.size() == b.params.size());
    auto ita = a.params.begin();
    auto itb = b.params.begin();
    for (; ita != a.params.end(); ++ita, ++itb) {
        CHECK(ita->first == itb->first);
        CHECK(bit_identical(ita->second, itb->second));
    }
    UNetModel c = build_unet(cfg, 43);
    CHECK_FALSE(bit_identical(a.params.at("stem.w"), c.params.at("stem.w")));
}

TEST_CASE("build_unet: skip channels follow base * mults") {
    UNetConfig cfg;  // defaults: base 32, mults {1,2,4}
    cfg.validate();
    CHECK(cfg.level_channels(0) == 32);
    CHECK(cfg.level_channels(1) == 64);
    CHECK(cfg.level_channels(2) == 128);

    UNetConfig bad = cfg;
    bad.channel_mults = {1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.base_channels = 30;  // not divisible by groups
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("build_unet: parameter count matches the analytic counter") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 1);
    // closed-form product-sum over the layer list
    auto conv_p = [](int cout, int cin, int k) { return cout * cin * k * k + cout; };
    auto block_p = [&](int cin, int cout, int emb) {
        return conv_p(cout, cin, 3) + 2 * cout           // conv1 + gn1
               + (cout * emb + cout)                     // emb proj
               + conv_p(cout, cout, 3) + 2 * cout;       // conv2 + gn2
    };
    int c0 = 8, c1 = 16, emb = 16;
    int64_t expect = 0;
    expect += conv_p(c0, 3, 3);          // stem
    expect += block_p(c0, c0, emb);      // enc0
    expect += conv_p(c1, c0, 3);         // down0
    expect += block_p(c1, c1, emb);      // enc1
    expect += block_p(c1, c1, emb);      // mid
    expect += block_p(2 * c1, c1, emb);  // dec0
    expect += conv_p(c0, c1, 3);         // up0
    expect += block_p(2 * c0, c0, emb);  // dec1
    expect += 2 * c0;                    // head gn
    expect += conv_p(3, c0, 3);          // head conv
    expect += 8 * emb;                   // label table
    CHECK(count_params(m.params, false) == expect);
}

TEST_CASE("unet_encode: shape law at 32x32 with N=3") {
    UNetConfig cfg;  // defaults
    UNetModel m = build_unet(cfg, 7);
    Rng rng(3);
    Tensor z = random_tensor({2, 3, 32, 32}, rng);
    Tensor emb = cond_embedding(cfg, m.params, 5, {1, 2});
    auto [bottleneck, skips] = unet_encode(cfg, m.params, z, emb);
    REQUIRE(skips.levels() == 3);
    CHECK(skips.s[0].shape() == Shape{2, 32, 32, 32});
    CHECK(skips.s[1].shape() == Shape{2, 64, 16, 16});
    CHECK(skips.s[2].shape() == Shape{2, 128, 8, 8});
    CHECK(bottleneck.shape() == Shape{2, 128, 8, 8});

    Tensor bad = Tensor::zeros({1, 3, 20, 20});
    CHECK_THROWS_AS(unet_encode(cfg, m.params, bad, emb), ShapeError);
}

TEST_CASE("unet_encode: zero input stays finite, repeated calls bit-identical") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 9);
    Tensor z = Tensor::zeros({1, 3, 16, 16});
    Tensor emb = cond_embedding(cfg, m.params, 1, {0});
    auto [b1, s1] = unet_encode(cfg, m.params, z, emb);
    auto [b2, s2] = unet_encode(cfg, m.params, z, emb);
    CHECK(b1.all_finite());
    for (const Tensor& s : s1.s) CHECK(s.all_finite());
    CHECK(bit_identical(b1, b2));
    for (int i = 0; i < s1.levels(); ++i) CHECK(bit_identical(s1.s[static_cast<size_t>(i)], s2.s[static_cast<size_t>(i)]));
}

TEST_CASE("skip capture points: s_i depends only on encoder levels <= i") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 11);
    Rng rng(5);
    Tensor z = random_tensor({1, 3, 16, 16}, rng);
    Tensor emb = cond_embedding(cfg, m.params, 3, {4});
    auto [b_ref, s_ref] = unet_encode(cfg, m.params, z, emb);
    // perturb a deeper weight (enc1) and the mid block; s_0 must not move
    m.params.at("enc1.conv1.w").data()[0] += 10.0f;
    m.params.at("mid.conv2.w").data()[0] -= 10.0f;
    auto [b_new, s_new] = unet_encode(cfg, m.params, z, emb);
    CHECK(bit_identical(s_ref.s[0], s_new.s[0]));
    CHECK_FALSE(bit_identical(s_ref.s[1], s_new.s[1]));
    CHECK_FALSE(bit_identical(b_ref, b_new));
}

TEST_CASE("unet_decode: with raw skips equals predict_noise and preserves shape") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 13);
    Rng rng(7);
    Tensor z = random_tensor({2, 3, 16, 16}, rng);
    Tensor emb = cond_embedding(cfg, m.params, 4, {1, 3});
    auto [bottleneck, skips] = unet_encode(cfg, m.params, z, emb);
    Tensor eps = unet_decode(cfg, m.params, bottleneck, skips, emb);
    CHECK(eps.shape() == z.shape());
    CHECK(eps.all_finite());
    Tensor direct = predict_noise(m, z, 4, {1, 3});
    CHECK(bit_identical(eps, direct));
}

TEST_CASE("unet_decode: skip shape mismatch raises") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 13);
    Rng rng(8);
    Tensor z = random_tensor({1, 3, 16, 16}, rng);
    Tensor emb = cond_embedding(cfg, m.params, 4, {1});
    auto [bottleneck, skips] = unet_encode(cfg, m.params, z, emb);
    SkipFeatures broken = skips;
    broken.s[0] = Tensor::zeros({1, 8, 8, 8});
    CHECK_THROWS_AS(unet_decode(cfg, m.params, bottleneck, broken, emb), ShapeError);
}

TEST_CASE("predict_noise: deterministic, label-sensitive, validates inputs") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 17);
    Rng rng(9);
    Tensor z = random_tensor({1, 3, 16, 16}, rng);
    // the zero-initialized head hides conditioning; give it small weights
    Tensor head = Tensor::uniform(m.params.at("head.w").shape(), -0.1f, 0.1f, rng);
    std::copy(head.data(), head.data() + head.numel(), m.params.at("head.w").data());
    Tensor a = predict_noise(m, z, 3, {2});
    Tensor b = predict_noise(m, z, 3, {2});
    CHECK(bit_identical(a, b));
    Tensor c = predict_noise(m, z, 3, {5});
    CHECK_FALSE(bit_identical(a, c));
    CHECK_THROWS_AS(predict_noise(m, z, 3, {8}), ShapeError);
    CHECK_THROWS_AS(predict_noise(m, z, 0, {2}), ShapeError);
    CHECK_THROWS_AS(predict_noise(m, z, 3, {1, 2}), ShapeError);
}

TEST_CASE("shape laws hold across the config matrix") {
    for (int n_levels : {2, 3}) {
        for (int base : {8, 32}) {
            for (int res : {16, 32}) {
                UNetConfig cfg;
                cfg.base_channels = base;
                cfg.channel_mults.assign(static_cast<size_t>(n_levels), 1);
                for (int i = 0; i < n_levels; ++i) cfg.channel_mults[static_cast<size_t>(i)] = 1 << i;
                cfg.groups = 8;
                cfg.time_embed_dim = 32;
                cfg.cond_embed_dim = 32;
                UNetModel m = build_unet(cfg, 21);
                Rng rng(static_cast<uint64_t>(res + base));
                Tensor z = random_tensor({1, 3, res, res}, rng);
                Tensor out = predict_noise(m, z, 2, {0});
                CHECK(out.shape() == z.shape());
                CHECK(out.all_finite());
            }
        }
    }
}

TEST_CASE("end-to-end differentiability: parameters across block types pass gradcheck") {
    UNetConfig cfg = small_cfg();
    UNetModel m = build_unet(cfg, 23);
    Rng rng(11);
    Tensor z = random_tensor({1, 3, 16, 16}, rng, -1.0f, 1.0f);
    set_trainable(m.params, false);
    auto run = [&] { return predict_noise(m, z, 3, {2}); };
    // probe one parameter tensor per block type through the full forward
    for (const char* pname : {"stem.w", "enc0.conv2.w", "enc0.gn1.g", "enc0.emb.w", "down0.w",
                              "mid.conv1.b", "dec0.conv1.w", "up0.w", "cond.table"}) {
        GradCheck res = grad_check_param(run, m.params.at(pname), 900 + static_cast<uint64_t>(pname[0]));
        INFO(pname);
        CHECK(res.max_rel < 1e-3);
    }
}
