#include "wcad/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wcad/schedule.hpp"

namespace wcad {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& section,
                    const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("config: unknown key '" + section + "." + it.key() + "'");
        }
    }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

int Config::operating_resolution() const {
    return diffusion.latent_mode ? dataset.size / 4 : dataset.size;
}

Config parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    Config cfg;
    reject_unknown(j, "",
                   {"dataset", "model", "diffusion", "control", "training", "sampling", "paths",
                    "eval", "bench"});

    if (j.contains("dataset")) {
        const json& s = j["dataset"];
        reject_unknown(s, "dataset", {"n", "base_seed", "size"});
        get_to(s, "n", cfg.dataset.n);
        get_to(s, "base_seed", cfg.dataset.base_seed);
        get_to(s, "size", cfg.dataset.size);
    }
    if (j.contains("model")) {
        const json& s = j["model"];
        reject_unknown(s, "model",
                       {"in_channels", "base_channels", "channel_mults", "time_embed_dim",
                        "cond_embed_dim", "num_scene_labels", "groups"});
        get_to(s, "in_channels", cfg.model.in_channels);
        get_to(s, "base_channels", cfg.model.base_channels);
        get_to(s, "channel_mults", cfg.model.channel_mults);
        get_to(s, "time_embed_dim", cfg.model.time_embed_dim);
        get_to(s, "cond_embed_dim", cfg.model.cond_embed_dim);
        get_to(s, "num_scene_labels", cfg.model.num_scene_labels);
        get_to(s, "groups", cfg.model.groups);
    }
    if (j.contains("diffusion")) {
        const json& s = j["diffusion"];
        reject_unknown(s, "diffusion",
                       {"T", "beta_start", "beta_end", "latent_mode", "latent_channels"});
        get_to(s, "T", cfg.diffusion.T);
        get_to(s, "beta_start", cfg.diffusion.beta_start);
        get_to(s, "beta_end", cfg.diffusion.beta_end);
        get_to(s, "latent_mode", cfg.diffusion.latent_mode);
        get_to(s, "latent_channels", cfg.diffusion.latent_channels);
    }
    if (j.contains("control")) {
        const json& s = j["control"];
        reject_unknown(s, "control",
                       {"variant", "window_sizes", "scaled_attention", "embed_hidden"});
        if (s.contains("variant")) {
            cfg.control.variant = variant_from_name(s.at("variant").get<std::string>());
        }
        get_to(s, "window_sizes", cfg.control.window_sizes);
        get_to(s, "scaled_attention", cfg.control.scaled_attention);
        get_to(s, "embed_hidden", cfg.control.embed_hidden);
    }
    if (j.contains("training")) {
        const json& s = j["training"];
        reject_unknown(s, "training", {"epochs", "lr", "batch", "seed", "max_steps"});
        get_to(s, "epochs", cfg.training.epochs);
        get_to(s, "lr", cfg.training.lr);
        get_to(s, "batch", cfg.training.batch);
        get_to(s, "seed", cfg.training.seed);
        get_to(s, "max_steps", cfg.training.max_steps);
    }
    if (j.contains("sampling")) {
        const json& s = j["sampling"];
        reject_unknown(s, "sampling", {"ddim_steps", "count", "seed"});
        get_to(s, "ddim_steps", cfg.sampling.ddim_steps);
        get_to(s, "count", cfg.sampling.count);
        get_to(s, "seed", cfg.sampling.seed);
    }
    if (j.contains("paths")) {
        const json& s = j["paths"];
        reject_unknown(s, "paths", {"out_dir", "checkpoint"});
        get_to(s, "out_dir", cfg.paths.out_dir);
        get_to(s, "checkpoint", cfg.paths.checkpoint);
    }
    if (j.contains("eval")) {
        const json& s = j["eval"];
        reject_unknown(s, "eval", {"checkpoints", "count", "extractor_epochs", "extractor_seed"});
        get_to(s, "checkpoints", cfg.eval.checkpoints);
        get_to(s, "count", cfg.eval.count);
        get_to(s, "extractor_epochs", cfg.eval.extractor_epochs);
        get_to(s, "extractor_seed", cfg.eval.extractor_seed);
    }
    if (j.contains("bench")) {
        const json& s = j["bench"];
        reject_unknown(s, "bench",
                       {"variants", "checkpoints", "batch", "ddim_steps", "repeats", "seed"});
        get_to(s, "variants", cfg.bench.variants);
        get_to(s, "checkpoints", cfg.bench.checkpoints);
        get_to(s, "batch", cfg.bench.batch);
        get_to(s, "ddim_steps", cfg.bench.ddim_steps);
        get_to(s, "repeats", cfg.bench.repeats);
        get_to(s, "seed", cfg.bench.seed);
    }
    return cfg;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

std::string config_to_json(const Config& cfg) {
    json j;
    j["dataset"] = {{"n", cfg.dataset.n},
                    {"base_seed", cfg.dataset.base_seed},
                    {"size", cfg.dataset.size}};
    j["model"] = {{"in_channels", cfg.model.in_channels},
                  {"base_channels", cfg.model.base_channels},
                  {"channel_mults", cfg.model.channel_mults},
                  {"time_embed_dim", cfg.model.time_embed_dim},
                  {"cond_embed_dim", cfg.model.cond_embed_dim},
                  {"num_scene_labels", cfg.model.num_scene_labels},
                  {"groups", cfg.model.groups}};
    j["diffusion"] = {{"T", cfg.diffusion.T},
                      {"beta_start", cfg.diffusion.beta_start},
                      {"beta_end", cfg.diffusion.beta_end},
                      {"latent_mode", cfg.diffusion.latent_mode},
                      {"latent_channels", cfg.diffusion.latent_channels}};
    j["control"] = {{"variant", variant_name(cfg.control.variant)},
                    {"window_sizes", cfg.control.window_sizes},
                    {"scaled_attention", cfg.control.scaled_attention},
                    {"embed_hidden", cfg.control.embed_hidden}};
    j["training"] = {{"epochs", cfg.training.epochs},
                     {"lr", cfg.training.lr},
                     {"batch", cfg.training.batch},
                     {"seed", cfg.training.seed},
                     {"max_steps", cfg.training.max_steps}};
    j["sampling"] = {{"ddim_steps", cfg.sampling.ddim_steps},
                     {"count", cfg.sampling.count},
                     {"seed", cfg.sampling.seed}};
    j["paths"] = {{"out_dir", cfg.paths.out_dir}, {"checkpoint", cfg.paths.checkpoint}};
    j["eval"] = {{"checkpoints", cfg.eval.checkpoints},
                 {"count", cfg.eval.count},
                 {"extractor_epochs", cfg.eval.extractor_epochs},
                 {"extractor_seed", cfg.eval.extractor_seed}};
    j["bench"] = {{"variants", cfg.bench.variants},
                  {"checkpoints", cfg.bench.checkpoints},
                  {"batch", cfg.bench.batch},
                  {"ddim_steps", cfg.bench.ddim_steps},
                  {"repeats", cfg.bench.repeats},
                  {"seed", cfg.bench.seed}};
    return j.dump();
}

void validate_config(const Config& cfg) {
    if (cfg.dataset.n < 10) {
        throw ConfigError("config: dataset.n must be >= 10, got " + std::to_string(cfg.dataset.n));
    }
    if (cfg.dataset.size < 16 || (cfg.dataset.size & (cfg.dataset.size - 1)) != 0) {
        throw ConfigError("config: dataset.size must be a power of two >= 16, got " +
                          std::to_string(cfg.dataset.size));
    }
    cfg.model.validate();
    if (cfg.model.num_scene_labels < 8) {
        throw ConfigError("config: model.num_scene_labels must be >= 8 (dataset labels span 0..7)");
    }
    if (cfg.diffusion.latent_mode) {
        if (cfg.dataset.size % 4 != 0) {
            throw ConfigError("config: latent_mode needs dataset.size divisible by 4");
        }
        if (cfg.model.in_channels != cfg.diffusion.latent_channels) {
            throw ConfigError("config: latent_mode needs model.in_channels == latent_channels (" +
                              std::to_string(cfg.diffusion.latent_channels) + ")");
        }
        if (cfg.diffusion.latent_channels < 1) {
            throw ConfigError("config: latent_channels must be positive");
        }
    } else if (cfg.model.in_channels != 3) {
        throw ConfigError("config: pixel mode needs model.in_channels == 3, got " +
                          std::to_string(cfg.model.in_channels));
    }

    int res = cfg.operating_resolution();
    int factor = 1 << (cfg.model.levels() - 1);
    if (res % factor != 0) {
        throw ConfigError("config: operating resolution " + std::to_string(res) +
                          " not divisible by 2^(levels-1) = " + std::to_string(factor));
    }

    // schedule preconditions (make_schedule re-checks, this surfaces early)
    if (cfg.diffusion.T < 1 || !(cfg.diffusion.beta_start > 0.0) ||
        !(cfg.diffusion.beta_start <= cfg.diffusion.beta_end) || !(cfg.diffusion.beta_end < 1.0)) {
        throw ConfigError("config: diffusion schedule needs T >= 1 and 0 < beta_start <= beta_end < 1");
    }

    cfg.control.validate(cfg.model, res);
    if (cfg.control.embed_hidden < 1) {
        throw ConfigError("config: control.embed_hidden must be positive");
    }

    if (cfg.training.batch < 1) throw ConfigError("config: training.batch must be >= 1");
    if (!(cfg.training.lr > 0.0)) throw ConfigError("config: training.lr must be > 0");
    if (cfg.training.epochs < 0 || cfg.training.max_steps < 0) {
        throw ConfigError("config: training.epochs and max_steps must be >= 0");
    }
    if (cfg.sampling.ddim_steps < 1 || cfg.sampling.ddim_steps > cfg.diffusion.T) {
        throw ConfigError("config: sampling.ddim_steps must lie in [1, T]");
    }
    if (cfg.sampling.count < 1) throw ConfigError("config: sampling.count must be >= 1");

    if (cfg.eval.count < 1) throw ConfigError("config: eval.count must be >= 1");
    int eval_available = cfg.dataset.n - (9 * cfg.dataset.n + 9) / 10;
    if (cfg.eval.count > eval_available) {
        throw ConfigError("config: eval.count " + std::to_string(cfg.eval.count) +
                          " exceeds eval split size " + std::to_string(eval_available));
    }
    if (cfg.eval.extractor_epochs < 1) {
        throw ConfigError("config: eval.extractor_epochs must be >= 1");
    }

    if (cfg.bench.repeats < 3) throw ConfigError("config: bench.repeats must be >= 3");
    if (cfg.bench.batch < 1) throw ConfigError("config: bench.batch must be >= 1");
    if (cfg.bench.ddim_steps < 1 || cfg.bench.ddim_steps > cfg.diffusion.T) {
        throw ConfigError("config: bench.ddim_steps must lie in [1, T]");
    }
    for (const std::string& v : cfg.bench.variants) {
        ControlConfig probe = cfg.control;
        probe.variant = variant_from_name(v);  // throws on unknown names
        probe.validate(cfg.model, res);
    }
}

std::string config_compat_mismatch(const Config& a, const Config& b) {
    if (a.model.in_channels != b.model.in_channels) return "model.in_channels";
    if (a.model.base_channels != b.model.base_channels) return "model.base_channels";
    if (a.model.channel_mults != b.model.channel_mults) return "model.channel_mults";
    if (a.model.time_embed_dim != b.model.time_embed_dim) return "model.time_embed_dim";
    if (a.model.cond_embed_dim != b.model.cond_embed_dim) return "model.cond_embed_dim";
    if (a.model.num_scene_labels != b.model.num_scene_labels) return "model.num_scene_labels";
    if (a.model.groups != b.model.groups) return "model.groups";
    if (a.diffusion.T != b.diffusion.T) return "diffusion.T";
    if (a.diffusion.beta_start != b.diffusion.beta_start) return "diffusion.beta_start";
    if (a.diffusion.beta_end != b.diffusion.beta_end) return "diffusion.beta_end";
    if (a.diffusion.latent_mode != b.diffusion.latent_mode) return "diffusion.latent_mode";
    if (a.diffusion.latent_channels != b.diffusion.latent_channels) return "diffusion.latent_channels";
    return "";
}

}  // namespace wcad
