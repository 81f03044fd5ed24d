#include "lad/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lad::io {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& scope) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(scope + key, "missing required field");
    return *it;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

StrategyKind parse_strategy_kind(const std::string& s) {
    if (s == "baseline") return StrategyKind::Baseline;
    if (s == "soft_label") return StrategyKind::SoftLabel;
    if (s == "lad") return StrategyKind::Lad;
    if (s == "solad") return StrategyKind::SoLad;
    if (s == "colad") return StrategyKind::CoLad;
    throw ConfigError("strategy.variant", "unknown value '" + s + "'");
}

DistillLoss parse_distill(const std::string& s) {
    if (s == "kl_focal") return DistillLoss::KlFocal;
    if (s == "l1") return DistillLoss::L1;
    if (s == "l2") return DistillLoss::L2;
    throw ConfigError("strategy.distill_loss", "unknown value '" + s + "'");
}

SwitchCriterion parse_criterion(const std::string& s) {
    if (s == "std_over_mean") return SwitchCriterion::StdOverMean;
    if (s == "fisher") return SwitchCriterion::Fisher;
    throw ConfigError("strategy.criterion", "unknown value '" + s + "'");
}

sim::FusionMode parse_fusion(const std::string& s) {
    if (s == "none") return sim::FusionMode::None;
    if (s == "iop") return sim::FusionMode::Iop;
    if (s == "cop") return sim::FusionMode::Cop;
    throw ConfigError("fusion.mode", "unknown value '" + s + "'");
}

std::string distill_name(DistillLoss loss) {
    switch (loss) {
        case DistillLoss::KlFocal: return "kl_focal";
        case DistillLoss::L1: return "l1";
        case DistillLoss::L2: return "l2";
    }
    return "kl_focal";
}

std::string criterion_name(SwitchCriterion c) {
    return c == SwitchCriterion::Fisher ? "fisher" : "std_over_mean";
}

std::string fusion_name(sim::FusionMode m) {
    switch (m) {
        case sim::FusionMode::None: return "none";
        case sim::FusionMode::Iop: return "iop";
        case sim::FusionMode::Cop: return "cop";
    }
    return "none";
}

json head_to_json(const sim::LinearHead& head) {
    return json{{"out", head.out}, {"in", head.in}, {"w", head.w}, {"b", head.b}};
}

sim::LinearHead head_from_json(const json& j, const std::string& scope) {
    sim::LinearHead head;
    head.out = require(j, "out", scope).get<int>();
    head.in = require(j, "in", scope).get<int>();
    head.w = require(j, "w", scope).get<std::vector<double>>();
    head.b = require(j, "b", scope).get<std::vector<double>>();
    if (head.w.size() != static_cast<std::size_t>(head.out) * head.in ||
        head.b.size() != static_cast<std::size_t>(head.out))
        throw ConfigError(scope, "weight shape mismatch");
    return head;
}

json box_to_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

}  // namespace

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Baseline: return "baseline";
        case StrategyKind::SoftLabel: return "soft_label";
        case StrategyKind::Lad: return "lad";
        case StrategyKind::SoLad: return "solad";
        case StrategyKind::CoLad: return "colad";
    }
    return "baseline";
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    const json& world = require(j, "world", "");
    cfg.world.width = get_or(world, "width", 64.0);
    cfg.world.height = get_or(world, "height", 64.0);
    cfg.world.num_classes = require(world, "num_classes", "world.").get<int>();
    cfg.world.max_objects = get_or(world, "max_objects", 3);
    if (auto it = world.find("size_range"); it != world.end()) {
        if (!it->is_array() || it->size() != 2)
            throw ConfigError("world.size_range", "expected [min,max]");
        cfg.world.min_size = (*it)[0].get<double>();
        cfg.world.max_size = (*it)[1].get<double>();
    }
    cfg.world.noise_sigma = get_or(world, "noise_sigma", 0.25);
    if (cfg.world.num_classes < 1) throw ConfigError("world.num_classes", "must be >= 1");
    if (cfg.world.max_objects < 1) throw ConfigError("world.max_objects", "must be >= 1");
    if (!(cfg.world.min_size > 0.0) || cfg.world.min_size > cfg.world.max_size)
        throw ConfigError("world.size_range", "must satisfy 0 < min <= max");

    const json& anchors = require(j, "anchors", "");
    const json& levels = require(anchors, "levels", "anchors.");
    if (!levels.is_array() || levels.empty())
        throw ConfigError("anchors.levels", "must be a non-empty array");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const std::string scope = "anchors.levels[" + std::to_string(i) + "].";
        LevelSpec spec;
        spec.stride = require(levels[i], "stride", scope).get<double>();
        spec.scale = require(levels[i], "scale", scope).get<double>();
        spec.rows = require(levels[i], "rows", scope).get<int>();
        spec.cols = require(levels[i], "cols", scope).get<int>();
        if (!(spec.stride > 0.0) || !(spec.scale > 0.0) || spec.rows <= 0 || spec.cols <= 0)
            throw ConfigError("anchors.levels[" + std::to_string(i) + "]",
                              "stride, scale, rows, cols must be > 0");
        cfg.anchor_levels.push_back(spec);
    }

    const json& train = require(j, "train", "");
    cfg.train.lr = get_or(train, "lr", 0.5);
    cfg.train.iterations = get_or(train, "iterations", 2000);
    cfg.train.warmup_iters = get_or(train, "warmup_iters", -1);
    cfg.train.batch_scenes = get_or(train, "batch_scenes", 8);
    cfg.train.gamma_assign = get_or(train, "gamma_assign", 2.0);
    cfg.train.gamma_distill = get_or(train, "gamma_distill", 0.5);
    cfg.train.seed = require(train, "seed", "train.").get<std::uint64_t>();
    cfg.train.threads = get_or(train, "threads", 1);
    cfg.train.eval_every = get_or(train, "eval_every", 0);
    cfg.train.init_fork = get_or(train, "init_fork", 0);
    if (cfg.train.iterations < 0) throw ConfigError("train.iterations", "must be >= 0");
    if (cfg.train.batch_scenes < 1) throw ConfigError("train.batch_scenes", "must be >= 1");
    if (cfg.train.gamma_assign < 0.0) throw ConfigError("train.gamma_assign", "must be >= 0");
    if (cfg.train.gamma_distill < 0.0) throw ConfigError("train.gamma_distill", "must be >= 0");
    if (cfg.train.threads < 1) throw ConfigError("train.threads", "must be >= 1");

    const json& strategy = require(j, "strategy", "");
    cfg.strategy.kind = parse_strategy_kind(require(strategy, "variant", "strategy.").get<std::string>());
    cfg.strategy.teacher_path = get_or(strategy, "teacher_path", std::string());
    cfg.strategy.distill_loss = parse_distill(get_or(strategy, "distill_loss", std::string("kl_focal")));
    cfg.strategy.criterion = parse_criterion(get_or(strategy, "criterion", std::string("std_over_mean")));

    if (auto it = j.find("fusion"); it != j.end()) {
        cfg.fusion.mode = parse_fusion(get_or(*it, "mode", std::string("none")));
        cfg.fusion.use_iou_head_at_inference = get_or(*it, "use_iou_head_at_inference", false);
    }
    if (auto it = j.find("eval"); it != j.end()) {
        cfg.eval.nms_iou = get_or(*it, "nms_iou", 0.6);
        cfg.eval.score_floor = get_or(*it, "score_floor", 0.05);
        if (cfg.eval.nms_iou < 0.0 || cfg.eval.nms_iou > 1.0)
            throw ConfigError("eval.nms_iou", "must be in [0,1]");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_file(path));
}

std::string dump_config(const ExperimentConfig& cfg) {
    json levels = json::array();
    for (const LevelSpec& lv : cfg.anchor_levels)
        levels.push_back(json{{"stride", lv.stride}, {"scale", lv.scale}, {"rows", lv.rows}, {"cols", lv.cols}});
    json j{
        {"format_version", kFormatVersion},
        {"world",
         {{"width", cfg.world.width},
          {"height", cfg.world.height},
          {"num_classes", cfg.world.num_classes},
          {"max_objects", cfg.world.max_objects},
          {"size_range", json::array({cfg.world.min_size, cfg.world.max_size})},
          {"noise_sigma", cfg.world.noise_sigma}}},
        {"anchors", {{"levels", levels}}},
        {"train",
         {{"lr", cfg.train.lr},
          {"iterations", cfg.train.iterations},
          {"warmup_iters", cfg.train.warmup_iters},
          {"batch_scenes", cfg.train.batch_scenes},
          {"gamma_assign", cfg.train.gamma_assign},
          {"gamma_distill", cfg.train.gamma_distill},
          {"seed", cfg.train.seed},
          {"threads", cfg.train.threads},
          {"eval_every", cfg.train.eval_every},
          {"init_fork", cfg.train.init_fork}}},
        {"strategy",
         {{"variant", strategy_name(cfg.strategy.kind)},
          {"teacher_path", cfg.strategy.teacher_path},
          {"distill_loss", distill_name(cfg.strategy.distill_loss)},
          {"criterion", criterion_name(cfg.strategy.criterion)}}},
        {"fusion",
         {{"mode", fusion_name(cfg.fusion.mode)},
          {"use_iou_head_at_inference", cfg.fusion.use_iou_head_at_inference}}},
        {"eval", {{"nms_iou", cfg.eval.nms_iou}, {"score_floor", cfg.eval.score_floor}}},
    };
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
    // The hash covers the model-shaping parts only, so train-schedule edits
    // (iterations, threads) do not orphan existing checkpoints.
    json j{{"num_classes", config.world.num_classes},
           {"fusion", fusion_name(config.fusion.mode)},
           {"levels", config.anchor_levels.size()}};
    const std::string s = j.dump();
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return std::string(buf);
}

std::string dataset_to_jsonl(const std::vector<sim::Scene>& scenes) {
    std::string out;
    for (const sim::Scene& scene : scenes) {
        json objects = json::array();
        for (const LabeledObject& obj : scene.objects)
            objects.push_back(json{{"class", obj.class_id}, {"box", box_to_json(obj.box)}});
        json line{{"id", scene.id}, {"objects", objects}, {"seed", scene.noise_seed}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

std::vector<sim::Scene> load_dataset(const std::string& path, const sim::WorldConfig& world) {
    std::ifstream in(path);
    if (!in) throw ConfigError("dataset", "cannot open '" + path + "'");
    std::vector<sim::Scene> scenes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string scope = "dataset line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError(scope, std::string("invalid JSON: ") + e.what());
        }
        sim::Scene scene;
        scene.id = require(j, "id", scope + ": ").get<std::int64_t>();
        scene.noise_seed = require(j, "seed", scope + ": ").get<std::uint64_t>();
        scene.width = world.width;
        scene.height = world.height;
        const json& objects = require(j, "objects", scope + ": ");
        for (const json& jo : objects) {
            LabeledObject obj;
            obj.class_id = require(jo, "class", scope + ": ").get<int>();
            const json& b = require(jo, "box", scope + ": ");
            if (!b.is_array() || b.size() != 4)
                throw ConfigError(scope + ": box", "expected [x1,y1,x2,y2]");
            obj.box = Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                          b[3].get<double>()};
            if (!box_valid(obj.box) || obj.box.area() <= 0.0)
                throw ConfigError(scope + ": box", "invalid or zero-area box");
            if (obj.class_id < 0 || obj.class_id >= world.num_classes)
                throw ConfigError(scope + ": class", "out of range for world.num_classes");
            scene.objects.push_back(obj);
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

void save_checkpoint(const std::string& path, const sim::ModelParams& params,
                     const std::string& hash) {
    json j{{"format_version", kFormatVersion},
           {"config_hash", hash},
           {"fusion", fusion_name(params.fusion)},
           {"feature_dim", params.feature_dim},
           {"num_classes", params.num_classes},
           {"heads",
            {{"cls", head_to_json(params.cls)},
             {"box", head_to_json(params.box)},
             {"obj", head_to_json(params.obj)},
             {"iou", head_to_json(params.iou_head)}}}};
    atomic_write(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("checkpoint", std::string("invalid JSON in '") + path + "': " + e.what());
    }
    Checkpoint ckpt;
    ckpt.config_hash = get_or(j, "config_hash", std::string());
    ckpt.params.fusion = parse_fusion(require(j, "fusion", "checkpoint.").get<std::string>());
    ckpt.params.feature_dim = require(j, "feature_dim", "checkpoint.").get<int>();
    ckpt.params.num_classes = require(j, "num_classes", "checkpoint.").get<int>();
    const json& heads = require(j, "heads", "checkpoint.");
    ckpt.params.cls = head_from_json(require(heads, "cls", "checkpoint.heads."), "checkpoint.heads.cls");
    ckpt.params.box = head_from_json(require(heads, "box", "checkpoint.heads."), "checkpoint.heads.box");
    ckpt.params.obj = head_from_json(require(heads, "obj", "checkpoint.heads."), "checkpoint.heads.obj");
    ckpt.params.iou_head =
        head_from_json(require(heads, "iou", "checkpoint.heads."), "checkpoint.heads.iou");
    return ckpt;
}

std::string history_to_jsonl(const std::vector<sim::HistoryRecord>& history) {
    std::string out;
    auto loss_to_json = [](const sim::LossBreakdown& l) {
        return json{{"total", l.total},      {"cls", l.cls},
                    {"loc", l.loc},          {"iou_head", l.iou_head},
                    {"distill_cls", l.distill_cls}, {"distill_loc", l.distill_loc},
                    {"num_pos", l.num_pos}};
    };
    for (const sim::HistoryRecord& r : history) {
        json j{{"iteration", r.iteration}, {"lr", r.lr}, {"loss", loss_to_json(r.loss)}};
        if (r.loss_b) j["loss_b"] = loss_to_json(*r.loss_b);
        if (r.role) {
            j["role"] = json{{"teacher", r.role->teacher == NetworkId::A ? "a" : "b"},
                             {"score_a", r.role->score_a},
                             {"score_b", r.role->score_b},
                             {"criterion", criterion_name(r.role->criterion)}};
        }
        if (r.eval_ap50) j["eval_ap50"] = *r.eval_ap50;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string metrics_to_json(const MetricsReport& report) {
    json per_class = json::array();
    for (const auto& ap : report.per_class_ap50) {
        if (ap)
            per_class.push_back(*ap);
        else
            per_class.push_back(nullptr);  // skipped class (no gts, no dets)
    }
    json j{{"format_version", kFormatVersion},
           {"ap50", report.ap50},
           {"map", report.map},
           {"per_class_ap50", per_class},
           {"classes_evaluated", report.classes_evaluated},
           {"counts",
            {{"tp", report.counts.tp},
             {"fp", report.counts.fp},
             {"fn", report.counts.fn},
             {"loc_err", report.counts.loc_err}}}};
    return j.dump(2);
}

void append_metrics_csv(const std::string& path, const std::string& run_id,
                        const std::string& strategy, std::uint64_t seed,
                        const MetricsReport& report) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw ConfigError("csv", "cannot open '" + path + "' for append");
    if (fresh) out << "run_id,strategy,seed,AP50,mAP,tp,fp,fn,loc_err\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f", report.ap50, report.map);
    out << run_id << ',' << strategy << ',' << seed << ',' << buf << ',' << report.counts.tp
        << ',' << report.counts.fp << ',' << report.counts.fn << ',' << report.counts.loc_err
        << '\n';
}

std::string assign_dump_to_json(const AssignResult& result, const sim::Scene& scene) {
    json objects = json::array();
    for (std::size_t oi = 0; oi < result.costs.per_object.size(); ++oi) {
        json cands = json::array();
        for (const CandidateCost& c : result.costs.per_object[oi])
            cands.push_back(json{{"anchor_id", c.anchor_id}, {"cost", c.cost}});
        const FitReport& fit = result.fits[oi];
        json jo{{"object_index", oi},
                {"class", scene.objects[oi].class_id},
                {"box", box_to_json(scene.objects[oi].box)},
                {"candidates", cands},
                {"gmm",
                 {{"mu1", fit.model.mu1},
                  {"mu2", fit.model.mu2},
                  {"sigma1", fit.model.sigma1},
                  {"sigma2", fit.model.sigma2},
                  {"pi1", fit.model.pi1},
                  {"pi2", fit.model.pi2},
                  {"degenerate", fit.degenerate},
                  {"iterations", fit.iterations}}},
                {"positives", result.positives[oi]}};
        objects.push_back(std::move(jo));
    }
    json j{{"format_version", kFormatVersion},
           {"scene_id", scene.id},
           {"objects", objects},
           {"labels", result.assignment.labels},
           {"objects_without_candidates", result.objects_without_candidates}};
    return j.dump(2);
}

std::string fit_report_to_json(const FitReport& report) {
    json j{{"mu1", report.model.mu1},
           {"mu2", report.model.mu2},
           {"sigma1", report.model.sigma1},
           {"sigma2", report.model.sigma2},
           {"pi1", report.model.pi1},
           {"pi2", report.model.pi2},
           {"iterations", report.iterations},
           {"final_loglik", report.final_loglik},
           {"degenerate", report.degenerate}};
    return j.dump(2);
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open '" + tmp + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("atomic_write: short write to '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("file", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace lad::io
