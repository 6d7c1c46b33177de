#include "wcad/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wcad/checkpoint.hpp"
#include "wcad/codec.hpp"
#include "wcad/diffusion.hpp"
#include "wcad/eval.hpp"
#include "wcad/optim.hpp"
#include "wcad/ops.hpp"
#include "wcad/ppm.hpp"

namespace wcad {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr uint64_t kControlSeedSalt = 0x5EEDC0DE5EEDC0DEULL;
constexpr uint64_t kCodecSeedSalt = 0xC0DEC0DEC0DEC0DEULL;
constexpr int kCheckpointEvery = 500;

const char* kClassNames[kNumTileClasses] = {"background", "road", "building", "water",
                                            "vegetation"};

struct ModelBundle {
    UNetModel base;
    ControlState state;
    LatentCodec codec;
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

Tensor stack_x0(const Dataset& ds, const std::vector<size_t>& idx, bool train_split) {
    const Sample& first = train_split ? ds.train(idx[0]) : ds.eval(idx[0]);
    int c = first.x0.dim(0), h = first.x0.dim(1), w = first.x0.dim(2);
    Tensor out = Tensor::zeros({static_cast<int>(idx.size()), c, h, w});
    size_t per = static_cast<size_t>(c) * h * w;
    for (size_t i = 0; i < idx.size(); ++i) {
        const Sample& s = train_split ? ds.train(idx[i]) : ds.eval(idx[i]);
        std::copy(s.x0.data(), s.x0.data() + per, out.data() + i * per);
    }
    return out;
}

Tensor stack_tiles(const Dataset& ds, const std::vector<size_t>& idx, bool train_split) {
    const Sample& first = train_split ? ds.train(idx[0]) : ds.eval(idx[0]);
    int s0 = first.tile.size;
    Tensor out = Tensor::zeros({static_cast<int>(idx.size()), 3, s0, s0});
    size_t per = static_cast<size_t>(3) * s0 * s0;
    for (size_t i = 0; i < idx.size(); ++i) {
        const Sample& s = train_split ? ds.train(idx[i]) : ds.eval(idx[i]);
        std::copy(s.tile.raster.data(), s.tile.raster.data() + per, out.data() + i * per);
    }
    return out;
}

Tensor batch_slice(const Tensor& batch, int b) {
    Shape s(batch.shape().begin() + 1, batch.shape().end());
    Tensor out = Tensor::zeros(s);
    size_t per = out.numel();
    std::copy(batch.data() + static_cast<size_t>(b) * per,
              batch.data() + static_cast<size_t>(b + 1) * per, out.data());
    return out;
}

void clamp_inplace(Tensor& t, float lo, float hi) {
    float* p = t.data();
    for (size_t i = 0; i < t.numel(); ++i) p[i] = std::clamp(p[i], lo, hi);
}

ModelBundle build_bundle(const Config& cfg, uint64_t model_seed) {
    ModelBundle bundle;
    bundle.base = build_unet(cfg.model, model_seed);
    CodecConfig cc;
    cc.identity = !cfg.diffusion.latent_mode;
    cc.latent_channels = cfg.diffusion.latent_channels;
    bundle.codec = LatentCodec::build(cc, model_seed ^ kCodecSeedSalt);
    return bundle;
}

void restore_group(ParamStore& target, const ParamStore& loaded, const std::string& prefix,
                   bool* any = nullptr) {
    for (const auto& [name, src] : loaded) {
        if (name.rfind(prefix, 0) != 0) continue;
        std::string local = name.substr(prefix.size());
        if (!target.contains(local)) {
            throw IoError("checkpoint parameter " + name + " has no destination in this config");
        }
        Tensor& dst = target.at(local);
        if (!same_shape(dst.shape(), src.shape())) {
            throw IoError("checkpoint parameter " + name + " shape " + shape_str(src.shape()) +
                          " != expected " + shape_str(dst.shape()));
        }
        std::copy(src.data(), src.data() + src.numel(), dst.data());
        if (any) *any = true;
    }
}

bool loaded_has_prefix(const ParamStore& loaded, const std::string& prefix) {
    for (const auto& [name, p] : loaded) {
        if (name.rfind(prefix, 0) == 0) return true;
    }
    return false;
}

// Build base+state, restoring from cfg.paths.checkpoint when set. The clone
// encoder is created after the base weights are restored so ControlNetLike
// starts from the loaded base.
ModelBundle load_bundle(const Config& cfg, uint64_t model_seed) {
    ModelBundle bundle = build_bundle(cfg, model_seed);
    CheckpointData ckpt;
    bool have_ckpt = !cfg.paths.checkpoint.empty();
    if (have_ckpt) {
        ckpt = load_checkpoint(cfg.paths.checkpoint);
        Config ckpt_cfg = parse_config_json(ckpt.config_json);
        std::string mismatch = config_compat_mismatch(cfg, ckpt_cfg);
        if (!mismatch.empty()) {
            throw ConfigError("checkpoint " + cfg.paths.checkpoint +
                              " incompatible with config: field " + mismatch);
        }
        restore_group(bundle.base.params, ckpt.params, "base.");
        restore_group(bundle.codec.params(), ckpt.params, "codec.");
    }
    bundle.state =
        build_control_state(bundle.base, cfg.control, model_seed ^ kControlSeedSalt);
    if (have_ckpt && loaded_has_prefix(ckpt.params, "ctrl.")) {
        restore_group(bundle.state.embed, ckpt.params, "ctrl.embed.");
        restore_group(bundle.state.adapter, ckpt.params, "ctrl.adapter.");
        restore_group(bundle.state.clone, ckpt.params, "ctrl.clone.");
    }
    return bundle;
}

ParamStore full_store(const ModelBundle& bundle, const Config& cfg) {
    ParamStore store;
    store.merge_prefixed(bundle.base.params, "base.");
    if (cfg.control.variant != ControlVariant::None) {
        store.merge(bundle.state.trainable_union());
    }
    if (cfg.diffusion.latent_mode) {
        store.merge_prefixed(bundle.codec.params(), "codec.");
    }
    return store;
}

// variant None trains the base; adapters train with the base frozen
void apply_freezing(ModelBundle& bundle, const Config& cfg) {
    bool base_trainable = cfg.control.variant == ControlVariant::None;
    set_trainable(bundle.base.params, base_trainable);
    set_trainable(bundle.state.embed, true);
    set_trainable(bundle.state.adapter, true);
    set_trainable(bundle.state.clone, true);
    set_trainable(bundle.codec.params(), false);
}

ParamStore trainable_store(const ModelBundle& bundle, const Config& cfg) {
    ParamStore store;
    if (cfg.control.variant == ControlVariant::None) {
        store.merge_prefixed(bundle.base.params, "base.");
    } else {
        store.merge(bundle.state.trainable_union());
    }
    return store;
}

DenoiserFn make_denoiser(const ModelBundle& bundle, const Config& cfg,
                         const std::vector<int>& labels, const Tensor& c) {
    if (cfg.control.variant == ControlVariant::None) {
        return [&bundle, labels](const Tensor& x_t, int t) {
            return predict_noise(bundle.base, x_t, t, labels);
        };
    }
    return [&bundle, labels, c](const Tensor& x_t, int t) {
        return controlled_predict_noise(bundle.base, bundle.state, x_t, t, labels, c);
    };
}

json iou_to_json(const std::array<double, kNumTileClasses>& per_class) {
    json j;
    for (int cls = 0; cls < kNumTileClasses; ++cls) {
        double v = per_class[static_cast<size_t>(cls)];
        if (std::isnan(v)) {
            j[kClassNames[cls]] = nullptr;
        } else {
            j[kClassNames[cls]] = v;
        }
    }
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp);
        out << text;
        if (!out) throw IoError("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

}  // namespace

TrainResult run_train(const Config& cfg) {
    validate_config(cfg);
    ensure_out_dir(cfg.paths.out_dir);

    Dataset ds = make_dataset(cfg.dataset.n, cfg.dataset.base_seed, cfg.dataset.size);
    if (cfg.training.batch > static_cast<int>(ds.train_count)) {
        throw ConfigError("config: training.batch " + std::to_string(cfg.training.batch) +
                          " exceeds train split size " + std::to_string(ds.train_count));
    }
    NoiseSchedule sched = make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start,
                                        cfg.diffusion.beta_end);
    ModelBundle bundle = load_bundle(cfg, cfg.training.seed);

    if (cfg.diffusion.latent_mode && !bundle.codec.config().identity) {
        // pretrain the codec unless the checkpoint already provided it
        bool have_codec = false;
        if (!cfg.paths.checkpoint.empty()) {
            CheckpointData ckpt = load_checkpoint(cfg.paths.checkpoint);
            have_codec = loaded_has_prefix(ckpt.params, "codec.");
        }
        if (!have_codec) {
            std::vector<Tensor> train_images;
            for (size_t i = 0; i < ds.train_count; ++i) train_images.push_back(ds.train(i).x0);
            set_trainable(bundle.codec.params(), true);
            codec_train(bundle.codec, train_images, 300, 8, 1e-3f,
                        cfg.training.seed ^ kCodecSeedSalt);
        }
    }

    apply_freezing(bundle, cfg);
    ParamStore trainable = trainable_store(bundle, cfg);

    int steps_per_epoch =
        static_cast<int>((ds.train_count + cfg.training.batch - 1) / cfg.training.batch);
    int total_steps = cfg.training.max_steps > 0 ? cfg.training.max_steps
                                                 : cfg.training.epochs * steps_per_epoch;
    if (total_steps < 1) throw ConfigError("config: training run would take 0 steps");

    Rng rng(cfg.training.seed);
    AdamOptimizer opt(static_cast<float>(cfg.training.lr));
    std::vector<float> losses;
    losses.reserve(static_cast<size_t>(total_steps));
    std::string config_echo = config_to_json(cfg);

    for (int step = 0; step < total_steps; ++step) {
        std::vector<size_t> idx(static_cast<size_t>(cfg.training.batch));
        std::vector<int> labels(static_cast<size_t>(cfg.training.batch));
        for (int b = 0; b < cfg.training.batch; ++b) {
            idx[static_cast<size_t>(b)] = rng.next_below(ds.train_count);
            labels[static_cast<size_t>(b)] = ds.train(idx[static_cast<size_t>(b)]).label;
        }
        Tensor x0 = stack_x0(ds, idx, true);
        Tensor c = stack_tiles(ds, idx, true);
        int t = rng.range_int(1, cfg.diffusion.T);

        Tensor z0 = x0;
        if (cfg.diffusion.latent_mode) {
            NoGradGuard no_tape;
            z0 = bundle.codec.encode(x0);
        }
        Tensor eta = Tensor::normal(z0.shape(), rng);

        Tape tape;
        TapeGuard guard(tape);
        DenoiserFn model = make_denoiser(bundle, cfg, labels, c);
        Tensor loss = training_loss(model, z0, t, eta, sched);
        if (!loss.all_finite()) {
            throw NumericError("training loss is not finite at step " + std::to_string(step));
        }
        trainable.zero_grads();
        tape.backward(loss);
        opt.step(trainable);
        losses.push_back(loss.item());

        if ((step + 1) % kCheckpointEvery == 0 && step + 1 < total_steps) {
            char name[64];
            std::snprintf(name, sizeof(name), "ckpt_step_%06d.wcad", step + 1);
            save_checkpoint(full_store(bundle, cfg), config_echo, step + 1, rng.state(),
                            (fs::path(cfg.paths.out_dir) / name).string());
        }
    }

    TrainResult result;
    result.losses = losses;
    result.checkpoint_path = (fs::path(cfg.paths.out_dir) / "ckpt_final.wcad").string();
    save_checkpoint(full_store(bundle, cfg), config_echo, total_steps, rng.state(),
                    result.checkpoint_path);

    std::string csv = "step,loss\n";
    for (size_t i = 0; i < losses.size(); ++i) {
        char row[64];
        std::snprintf(row, sizeof(row), "%zu,%.9g\n", i, static_cast<double>(losses[i]));
        csv += row;
    }
    result.loss_csv_path = (fs::path(cfg.paths.out_dir) / "loss.csv").string();
    write_text(result.loss_csv_path, csv);
    return result;
}

void run_sample(const Config& cfg) {
    validate_config(cfg);
    if (cfg.paths.checkpoint.empty()) {
        throw ConfigError("run_sample: paths.checkpoint (or --checkpoint) is required");
    }
    ensure_out_dir(cfg.paths.out_dir);

    Dataset ds = make_dataset(cfg.dataset.n, cfg.dataset.base_seed, cfg.dataset.size);
    NoiseSchedule sched = make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start,
                                        cfg.diffusion.beta_end);
    ModelBundle bundle = load_bundle(cfg, cfg.training.seed);
    set_trainable(bundle.base.params, false);
    set_trainable(bundle.state.embed, false);
    set_trainable(bundle.state.adapter, false);
    set_trainable(bundle.state.clone, false);
    set_trainable(bundle.codec.params(), false);

    int res = cfg.operating_resolution();
    json index;
    index["samples"] = json::array();
    for (int i = 0; i < cfg.sampling.count; ++i) {
        size_t eval_idx = static_cast<size_t>(i) % ds.eval_count();
        const Sample& sample = ds.eval(eval_idx);
        std::vector<size_t> one{eval_idx};
        Tensor c = stack_tiles(ds, one, false);
        std::vector<int> labels{sample.label};
        uint64_t noise_seed = cfg.sampling.seed + static_cast<uint64_t>(i);

        DenoiserFn model = make_denoiser(bundle, cfg, labels, c);
        Tensor x = ddim_sample(model, sched, cfg.sampling.ddim_steps,
                               {1, bundle.base.cfg.in_channels, res, res}, noise_seed);
        Tensor img = cfg.diffusion.latent_mode ? bundle.codec.decode(x) : x;
        clamp_inplace(img, -1.0f, 1.0f);

        char gen_name[64], ctrl_name[64];
        std::snprintf(gen_name, sizeof(gen_name), "sample_%06d_gen.ppm", i);
        std::snprintf(ctrl_name, sizeof(ctrl_name), "sample_%06d_control.ppm", i);
        write_ppm(batch_slice(img, 0), (fs::path(cfg.paths.out_dir) / gen_name).string());
        write_ppm(sample.tile.raster, (fs::path(cfg.paths.out_dir) / ctrl_name).string());

        json entry;
        entry["index"] = i;
        entry["tile_seed"] = sample.seed;
        entry["label"] = sample.label;
        entry["noise_seed"] = noise_seed;
        entry["generated"] = gen_name;
        entry["control"] = ctrl_name;
        index["samples"].push_back(entry);
    }
    write_text((fs::path(cfg.paths.out_dir) / "index.json").string(), index.dump(2));
}

namespace {

struct EvalRow {
    std::string name;
    double fid_value = 0.0;
    std::array<double, kNumTileClasses> per_class{};
    double mean_iou = 0.0;
    bool has_runtime = false;
    double time_ms_mean = 0.0, time_ms_std = 0.0;
    int64_t params_total = 0, params_trainable = 0, flops = 0;
    size_t peak = 0;
};

void aggregate_iou(const std::vector<IouReport>& reports, EvalRow& row) {
    std::array<double, kNumTileClasses> sums{};
    std::array<int, kNumTileClasses> counts{};
    double mean_sum = 0.0;
    for (const IouReport& r : reports) {
        mean_sum += r.mean;
        for (int cls = 0; cls < kNumTileClasses; ++cls) {
            if (r.in_tile[static_cast<size_t>(cls)]) {
                sums[static_cast<size_t>(cls)] += r.per_class[static_cast<size_t>(cls)];
                ++counts[static_cast<size_t>(cls)];
            }
        }
    }
    for (int cls = 0; cls < kNumTileClasses; ++cls) {
        row.per_class[static_cast<size_t>(cls)] =
            counts[static_cast<size_t>(cls)] > 0
                ? sums[static_cast<size_t>(cls)] / counts[static_cast<size_t>(cls)]
                : std::nan("");
    }
    row.mean_iou = reports.empty() ? 0.0 : mean_sum / static_cast<double>(reports.size());
}

}  // namespace

void run_eval(const Config& cfg) {
    validate_config(cfg);
    if (cfg.eval.checkpoints.empty()) {
        throw ConfigError("run_eval: eval.checkpoints must list at least one variant");
    }
    ensure_out_dir(cfg.paths.out_dir);

    Dataset ds = make_dataset(cfg.dataset.n, cfg.dataset.base_seed, cfg.dataset.size);
    NoiseSchedule sched = make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start,
                                        cfg.diffusion.beta_end);
    FeatureExtractor fx =
        train_feature_extractor(ds, cfg.eval.extractor_epochs, cfg.eval.extractor_seed);

    int count = cfg.eval.count;
    std::vector<Tensor> real_images;
    for (int i = 0; i < count; ++i) real_images.push_back(ds.eval(static_cast<size_t>(i)).x0);

    std::vector<EvalRow> rows;
    {
        EvalRow row;
        row.name = "real_data";
        row.fid_value = fid(fx, real_images, real_images);
        std::vector<IouReport> reports;
        for (int i = 0; i < count; ++i) {
            reports.push_back(alignment_iou(real_images[static_cast<size_t>(i)],
                                            ds.eval(static_cast<size_t>(i)).tile));
        }
        aggregate_iou(reports, row);
        rows.push_back(row);
    }

    for (const auto& [name, ckpt_path] : cfg.eval.checkpoints) {
        CheckpointData ckpt = load_checkpoint(ckpt_path);
        Config vcfg = cfg;
        {
            Config echo = parse_config_json(ckpt.config_json);
            std::string mismatch = config_compat_mismatch(cfg, echo);
            if (!mismatch.empty()) {
                throw ConfigError("checkpoint " + ckpt_path + " incompatible with config: field " +
                                  mismatch);
            }
            vcfg.control = echo.control;
        }
        vcfg.paths.checkpoint = ckpt_path;
        ModelBundle bundle = load_bundle(vcfg, vcfg.training.seed);
        apply_freezing(bundle, vcfg);
        if (vcfg.control.variant != ControlVariant::None) {
            set_trainable(bundle.base.params, false);
        }

        EvalRow row;
        row.name = name;
        std::vector<Tensor> gen_images;
        std::vector<IouReport> reports;
        std::vector<double> chunk_times;
        const int chunk = 8;
        reset_peak_bytes();
        int res = vcfg.operating_resolution();
        for (int start = 0; start < count; start += chunk) {
            int take = std::min(chunk, count - start);
            std::vector<size_t> idx;
            std::vector<int> labels;
            for (int i = 0; i < take; ++i) {
                idx.push_back(static_cast<size_t>(start + i));
                labels.push_back(ds.eval(static_cast<size_t>(start + i)).label);
            }
            Tensor c = stack_tiles(ds, idx, false);
            DenoiserFn model = make_denoiser(bundle, vcfg, labels, c);
            auto t0 = std::chrono::steady_clock::now();
            // one start-noise stream per tile index: seed + start (+ element)
            Tensor x = ddim_sample(model, sched, cfg.sampling.ddim_steps,
                                   {take, bundle.base.cfg.in_channels, res, res},
                                   cfg.sampling.seed + static_cast<uint64_t>(start));
            auto t1 = std::chrono::steady_clock::now();
            chunk_times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            Tensor imgs = vcfg.diffusion.latent_mode ? bundle.codec.decode(x) : x;
            clamp_inplace(imgs, -1.0f, 1.0f);
            for (int i = 0; i < take; ++i) {
                Tensor img = batch_slice(imgs, i);
                reports.push_back(alignment_iou(img, ds.eval(static_cast<size_t>(start + i)).tile));
                gen_images.push_back(std::move(img));
            }
        }
        row.fid_value = fid(fx, real_images, gen_images);
        aggregate_iou(reports, row);
        row.has_runtime = true;
        double mean = 0.0;
        for (double t : chunk_times) mean += t;
        mean /= static_cast<double>(chunk_times.size());
        double var = 0.0;
        for (double t : chunk_times) var += (t - mean) * (t - mean);
        row.time_ms_mean = mean;
        row.time_ms_std = chunk_times.size() > 1
                              ? std::sqrt(var / static_cast<double>(chunk_times.size() - 1))
                              : 0.0;
        row.peak = peak_bytes();
        ParamStore ctrl_union = bundle.state.trainable_union();
        row.params_total =
            count_params(bundle.base.params, false) + count_params(ctrl_union, false);
        row.params_trainable =
            count_params(bundle.base.params, true) + count_params(ctrl_union, true);
        row.flops = count_flops(describe_controlled_forward(vcfg.model, vcfg.control, res, chunk)) *
                    cfg.sampling.ddim_steps;
        rows.push_back(row);
    }

    json out;
    out["rows"] = json::array();
    std::string csv = "variant,fid,mean_iou\n";
    for (const EvalRow& row : rows) {
        json r;
        r["variant"] = row.name;
        r["fid"] = row.fid_value;
        r["mean_iou"] = row.mean_iou;
        r["per_class_iou"] = iou_to_json(row.per_class);
        if (row.has_runtime) {
            r["runtime"] = {{"time_ms_mean", row.time_ms_mean},
                            {"time_ms_std", row.time_ms_std},
                            {"params_total", row.params_total},
                            {"params_trainable", row.params_trainable},
                            {"flops", row.flops},
                            {"peak_bytes", row.peak}};
        }
        out["rows"].push_back(r);
        char line[160];
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f\n", row.name.c_str(), row.fid_value,
                      row.mean_iou);
        csv += line;
    }
    write_text((fs::path(cfg.paths.out_dir) / "metrics.json").string(), out.dump(2));
    write_text((fs::path(cfg.paths.out_dir) / "eval_table.csv").string(), csv);
}

void run_bench(const Config& cfg) {
    validate_config(cfg);
    ensure_out_dir(cfg.paths.out_dir);
    NoiseSchedule sched = make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start,
                                        cfg.diffusion.beta_end);
    int res = cfg.operating_resolution();

    json out;
    out["rows"] = json::array();
    std::string csv =
        "variant,params_total,params_trainable,time_per_batch_ms_mean,time_per_batch_ms_std,"
        "peak_bytes,flops_per_batch\n";
    for (const std::string& name : cfg.bench.variants) {
        Config vcfg = cfg;
        vcfg.control.variant = variant_from_name(name);
        auto it = cfg.bench.checkpoints.find(name);
        vcfg.paths.checkpoint = (it != cfg.bench.checkpoints.end()) ? it->second : "";
        ModelBundle bundle = load_bundle(vcfg, vcfg.training.seed);
        apply_freezing(bundle, vcfg);
        RuntimeStats stats =
            benchmark_variant(bundle.base, bundle.state, sched, res, cfg.bench.batch,
                              cfg.bench.ddim_steps, cfg.bench.repeats, cfg.bench.seed);
        json r;
        r["variant"] = name;
        r["params_total"] = stats.params_total;
        r["params_trainable"] = stats.params_trainable;
        r["time_per_batch_ms_mean"] = stats.time_ms_mean;
        r["time_per_batch_ms_std"] = stats.time_ms_std;
        r["peak_bytes"] = stats.peak_bytes;
        r["flops_per_batch"] = stats.flops_per_batch;
        out["rows"].push_back(r);
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%lld,%lld,%.3f,%.3f,%zu,%lld\n", name.c_str(),
                      static_cast<long long>(stats.params_total),
                      static_cast<long long>(stats.params_trainable), stats.time_ms_mean,
                      stats.time_ms_std, stats.peak_bytes,
                      static_cast<long long>(stats.flops_per_batch));
        csv += line;
    }
    write_text((fs::path(cfg.paths.out_dir) / "bench_table.json").string(), out.dump(2));
    write_text((fs::path(cfg.paths.out_dir) / "bench_table.csv").string(), csv);
}

void run_dataset_export(const Config& cfg) {
    validate_config(cfg);
    ensure_out_dir(cfg.paths.out_dir);
    Dataset ds = make_dataset(cfg.dataset.n, cfg.dataset.base_seed, cfg.dataset.size);
    json index;
    index["size"] = cfg.dataset.size;
    index["base_seed"] = cfg.dataset.base_seed;
    index["train_count"] = ds.train_count;
    index["samples"] = json::array();
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& s = ds.samples[i];
        char target_name[64], control_name[64];
        std::snprintf(target_name, sizeof(target_name), "sample_%06zu_target.ppm", i);
        std::snprintf(control_name, sizeof(control_name), "sample_%06zu_control.ppm", i);
        write_ppm(s.x0, (fs::path(cfg.paths.out_dir) / target_name).string());
        write_ppm(s.tile.raster, (fs::path(cfg.paths.out_dir) / control_name).string());
        json entry;
        entry["index"] = i;
        entry["seed"] = s.seed;
        entry["label"] = s.label;
        entry["split"] = i < ds.train_count ? "train" : "eval";
        entry["target"] = target_name;
        entry["control"] = control_name;
        index["samples"].push_back(entry);
    }
    write_text((fs::path(cfg.paths.out_dir) / "index.json").string(), index.dump(2));
}

}  // namespace wcad
