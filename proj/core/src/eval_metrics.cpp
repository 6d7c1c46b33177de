#include <algorithm>
#include <cmath>
#include <cstdio>

#include "wcad/eval.hpp"
#include "wcad/optim.hpp"
#include "wcad/ops.hpp"
#include "wcad/rng.hpp"
#include "wcad/tape.hpp"

namespace wcad {

namespace {

Tensor conv_weight(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout, cin, k, k}, -bound, bound, rng);
}

Tensor conv_bias(int cout, int cin, int k, Rng& rng) {
    float bound = 1.0f / std::sqrt(static_cast<float>(cin * k * k));
    return Tensor::uniform({cout}, -bound, bound, rng);
}

Tensor stack_images(const std::vector<const Tensor*>& images) {
    int c = images[0]->dim(0), h = images[0]->dim(1), w = images[0]->dim(2);
    Tensor batch = Tensor::zeros({static_cast<int>(images.size()), c, h, w});
    size_t per = static_cast<size_t>(c) * h * w;
    float* bp = batch.data();
    for (size_t i = 0; i < images.size(); ++i) {
        const float* src = images[i]->data();
        std::copy(src, src + per, bp + i * per);
    }
    return batch;
}

// cyclic Jacobi eigendecomposition of a symmetric matrix (double, n x n)
void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& values,
                  std::vector<double>& vectors) {
    vectors.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) vectors[static_cast<size_t>(i) * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) off += std::abs(a[static_cast<size_t>(i) * n + j]);
        }
        if (off < 1e-13) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a[static_cast<size_t>(p) * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = a[static_cast<size_t>(p) * n + p];
                double aqq = a[static_cast<size_t>(q) * n + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a[static_cast<size_t>(k) * n + p];
                    double akq = a[static_cast<size_t>(k) * n + q];
                    a[static_cast<size_t>(k) * n + p] = c * akp - s * akq;
                    a[static_cast<size_t>(k) * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[static_cast<size_t>(p) * n + k];
                    double aqk = a[static_cast<size_t>(q) * n + k];
                    a[static_cast<size_t>(p) * n + k] = c * apk - s * aqk;
                    a[static_cast<size_t>(q) * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = vectors[static_cast<size_t>(k) * n + p];
                    double vkq = vectors[static_cast<size_t>(k) * n + q];
                    vectors[static_cast<size_t>(k) * n + p] = c * vkp - s * vkq;
                    vectors[static_cast<size_t>(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    values.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) values[static_cast<size_t>(i)] = a[static_cast<size_t>(i) * n + i];
}

}  // namespace

FeatureExtractor train_feature_extractor(const Dataset& data, int epochs, uint64_t seed,
                                         float* train_accuracy) {
    if (data.train_count == 0) throw ConfigError("train_feature_extractor: empty train split");
    FeatureExtractor fx;
    fx.num_labels = 8;
    Rng rng(seed);
    fx.params.add("c1.w", conv_weight(16, 3, 3, rng));
    fx.params.add("c1.b", conv_bias(16, 3, 3, rng));
    fx.params.add("c2.w", conv_weight(32, 16, 3, rng));
    fx.params.add("c2.b", conv_bias(32, 16, 3, rng));
    fx.params.add("c3.w", conv_weight(kFeatureDim, 32, 3, rng));
    fx.params.add("c3.b", conv_bias(kFeatureDim, 32, 3, rng));
    {
        float bound = 1.0f / std::sqrt(static_cast<float>(kFeatureDim));
        fx.params.add("head.w", Tensor::uniform({fx.num_labels, kFeatureDim}, -bound, bound, rng));
        fx.params.add("head.b", Tensor::uniform({fx.num_labels}, -bound, bound, rng));
    }

    const int batch = 32;
    size_t ntrain = data.train_count;
    AdamOptimizer opt(1e-3f);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        // deterministic shuffle
        std::vector<size_t> order(ntrain);
        for (size_t i = 0; i < ntrain; ++i) order[i] = i;
        for (size_t i = ntrain; i > 1; --i) {
            size_t j = rng.next_below(i);
            std::swap(order[i - 1], order[j]);
        }
        for (size_t pos = 0; pos < ntrain; pos += batch) {
            size_t take = std::min<size_t>(batch, ntrain - pos);
            std::vector<const Tensor*> imgs;
            std::vector<int> labels;
            for (size_t i = 0; i < take; ++i) {
                const Sample& s = data.train(order[pos + i]);
                imgs.push_back(&s.x0);
                labels.push_back(s.label);
            }
            Tensor xb = stack_images(imgs);
            Tape tape;
            TapeGuard guard(tape);
            Tensor logits = extractor_logits(fx, xb);
            Tensor loss = cross_entropy_logits(logits, labels);
            fx.params.zero_grads();
            tape.backward(loss);
            opt.step(fx.params);
        }
    }

    if (train_accuracy) {
        size_t correct = 0;
        for (size_t i = 0; i < ntrain; ++i) {
            const Sample& s = data.train(i);
            std::vector<const Tensor*> one{&s.x0};
            Tensor logits = extractor_logits(fx, stack_images(one));
            const float* lp = logits.data();
            int best = 0;
            for (int j = 1; j < fx.num_labels; ++j) {
                if (lp[j] > lp[best]) best = j;
            }
            if (best == s.label) ++correct;
        }
        *train_accuracy = static_cast<float>(correct) / static_cast<float>(ntrain);
    }
    return fx;
}

Tensor extractor_features(const FeatureExtractor& fx, const Tensor& images) {
    if (images.rank() != 4 || images.dim(1) != 3) {
        throw ShapeError("extractor_features: expected [B,3,H,W], got " + shape_str(images.shape()));
    }
    Tensor h = conv2d(images, fx.params.at("c1.w"), fx.params.at("c1.b"), 1, 1);
    h = silu(h);
    h = conv2d(h, fx.params.at("c2.w"), fx.params.at("c2.b"), 2, 1);
    h = silu(h);
    h = conv2d(h, fx.params.at("c3.w"), fx.params.at("c3.b"), 2, 1);
    h = silu(h);
    return global_avg_pool(h);
}

Tensor extractor_logits(const FeatureExtractor& fx, const Tensor& images) {
    Tensor feats = extractor_features(fx, images);
    return linear(feats, fx.params.at("head.w"), fx.params.at("head.b"));
}

GaussianFit fit_gaussian(const Tensor& features) {
    if (features.rank() != 2) {
        throw ShapeError("fit_gaussian: expected [n,d] features, got " + shape_str(features.shape()));
    }
    int n = features.dim(0), d = features.dim(1);
    if (n < 2) throw ConfigError("fit_gaussian: need at least 2 rows, got " + std::to_string(n));
    GaussianFit g;
    g.dim = d;
    g.mean.assign(static_cast<size_t>(d), 0.0);
    g.cov.assign(static_cast<size_t>(d) * d, 0.0);
    const float* fp = features.data();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) g.mean[static_cast<size_t>(j)] += fp[static_cast<size_t>(i) * d + j];
    }
    for (int j = 0; j < d; ++j) g.mean[static_cast<size_t>(j)] /= n;
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            double da = fp[static_cast<size_t>(i) * d + a] - g.mean[static_cast<size_t>(a)];
            for (int b = a; b < d; ++b) {
                double db = fp[static_cast<size_t>(i) * d + b] - g.mean[static_cast<size_t>(b)];
                g.cov[static_cast<size_t>(a) * d + b] += da * db;
            }
        }
    }
    double denom = static_cast<double>(n - 1);
    for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) {
            double v = g.cov[static_cast<size_t>(a) * d + b] / denom;
            g.cov[static_cast<size_t>(a) * d + b] = v;
            g.cov[static_cast<size_t>(b) * d + a] = v;
        }
    }
    return g;
}

std::vector<double> sqrt_spd(const std::vector<double>& m, int n) {
    std::vector<double> values, vectors;
    jacobi_eigen(m, n, values, vectors);
    std::vector<double> out(static_cast<size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        double lam = values[static_cast<size_t>(k)];
        double s = lam > 0.0 ? std::sqrt(lam) : 0.0;
        for (int i = 0; i < n; ++i) {
            double vis = vectors[static_cast<size_t>(i) * n + k] * s;
            for (int j = 0; j < n; ++j) {
                out[static_cast<size_t>(i) * n + j] += vis * vectors[static_cast<size_t>(j) * n + k];
            }
        }
    }
    return out;
}

double frechet_distance(const GaussianFit& g1, const GaussianFit& g2) {
    if (g1.dim != g2.dim) {
        throw ShapeError("frechet_distance: dimension mismatch " + std::to_string(g1.dim) + " vs " +
                         std::to_string(g2.dim));
    }
    int d = g1.dim;
    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) {
        double di = g1.mean[static_cast<size_t>(i)] - g2.mean[static_cast<size_t>(i)];
        mean_term += di * di;
    }
    // product, then symmetrize before the eigendecomposition
    std::vector<double> prod(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
            double a = g1.cov[static_cast<size_t>(i) * d + k];
            if (a == 0.0) continue;
            for (int j = 0; j < d; ++j) {
                prod[static_cast<size_t>(i) * d + j] += a * g2.cov[static_cast<size_t>(k) * d + j];
            }
        }
    }
    std::vector<double> sym(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            sym[static_cast<size_t>(i) * d + j] = 0.5 * (prod[static_cast<size_t>(i) * d + j] +
                                                         prod[static_cast<size_t>(j) * d + i]);
        }
    }
    std::vector<double> values, vectors;
    jacobi_eigen(sym, d, values, vectors);
    double trace_sqrt = 0.0;
    for (double lam : values) trace_sqrt += lam > 0.0 ? std::sqrt(lam) : 0.0;
    double trace12 = 0.0;
    for (int i = 0; i < d; ++i) {
        trace12 += g1.cov[static_cast<size_t>(i) * d + i] + g2.cov[static_cast<size_t>(i) * d + i];
    }
    double result = mean_term + trace12 - 2.0 * trace_sqrt;
    return result < 0.0 ? 0.0 : result;
}

double fid(const FeatureExtractor& fx, const std::vector<Tensor>& real,
           const std::vector<Tensor>& generated) {
    if (real.empty() || generated.empty()) {
        throw ConfigError("fid: empty image set");
    }
    if (real.size() < 65 || generated.size() < 65) {
        std::fprintf(stderr,
                     "warning: fid with %zu/%zu images per side; covariance rank suggests >= 65\n",
                     real.size(), generated.size());
    }
    auto features_of = [&](const std::vector<Tensor>& images) {
        Tensor feats = Tensor::zeros({static_cast<int>(images.size()), kFeatureDim});
        float* out = feats.data();
        const size_t chunk = 64;
        size_t done = 0;
        while (done < images.size()) {
            size_t take = std::min(chunk, images.size() - done);
            std::vector<const Tensor*> ptrs;
            for (size_t i = 0; i < take; ++i) ptrs.push_back(&images[done + i]);
            Tensor f = extractor_features(fx, stack_images(ptrs));
            std::copy(f.data(), f.data() + f.numel(), out + done * kFeatureDim);
            done += take;
        }
        return feats;
    };
    GaussianFit g_real = fit_gaussian(features_of(real));
    GaussianFit g_gen = fit_gaussian(features_of(generated));
    return frechet_distance(g_real, g_gen);
}

IouReport alignment_iou(const Tensor& gen_image, const GeometryTile& tile) {
    if (gen_image.rank() != 3 || gen_image.dim(0) != 3 || gen_image.dim(1) != tile.size ||
        gen_image.dim(2) != tile.size) {
        throw ShapeError("alignment_iou: image " + shape_str(gen_image.shape()) +
                         " does not match tile size " + std::to_string(tile.size));
    }
    std::vector<uint8_t> mask = class_mask(gen_image);
    IouReport report;
    std::array<int64_t, kNumTileClasses> inter{}, uni{};
    std::array<int64_t, kNumTileClasses> tile_count{};
    for (size_t i = 0; i < mask.size(); ++i) {
        int a = tile.class_map[i];
        int b = mask[i];
        ++tile_count[static_cast<size_t>(a)];
        if (a == b) {
            ++inter[static_cast<size_t>(a)];
            ++uni[static_cast<size_t>(a)];
        } else {
            ++uni[static_cast<size_t>(a)];
            ++uni[static_cast<size_t>(b)];
        }
    }
    double sum = 0.0;
    int present = 0;
    for (int cls = 0; cls < kNumTileClasses; ++cls) {
        report.in_tile[static_cast<size_t>(cls)] = tile_count[static_cast<size_t>(cls)] > 0;
        if (uni[static_cast<size_t>(cls)] == 0) {
            report.per_class[static_cast<size_t>(cls)] = std::nan("");
            continue;
        }
        double iou = static_cast<double>(inter[static_cast<size_t>(cls)]) /
                     static_cast<double>(uni[static_cast<size_t>(cls)]);
        report.per_class[static_cast<size_t>(cls)] = iou;
        if (report.in_tile[static_cast<size_t>(cls)]) {
            sum += iou;
            ++present;
        }
    }
    report.mean = present > 0 ? sum / present : 0.0;
    return report;
}

}  // namespace wcad
