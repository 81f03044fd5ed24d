#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lad/colad.hpp"
#include "lad/geometry.hpp"
#include "lad/sim/model.hpp"
#include "lad/sim/world.hpp"

namespace lad {

enum class StrategyKind { Baseline, SoftLabel, Lad, SoLad, CoLad };
enum class DistillLoss { KlFocal, L1, L2 };

struct StrategyConfig {
    StrategyKind kind = StrategyKind::Baseline;
    std::string teacher_path;  // required for SoftLabel / Lad / SoLad
    DistillLoss distill_loss = DistillLoss::KlFocal;
    SwitchCriterion criterion = SwitchCriterion::StdOverMean;
};

struct TrainConfig {
    double lr = 0.5;
    int iterations = 2000;
    int warmup_iters = -1;  // -1: strategy default (500; 3000 for soft_label)
    int batch_scenes = 8;
    double gamma_assign = 2.0;
    double gamma_distill = 0.5;
    std::uint64_t seed = 0;
    int threads = 1;
    int eval_every = 0;  // 0 disables periodic AP50 logging
    int init_fork = 0;   // init sub-stream for single-network strategies
};

struct FusionConfig {
    sim::FusionMode mode = sim::FusionMode::None;
    bool use_iou_head_at_inference = false;
};

struct EvalConfig {
    double nms_iou = 0.6;
    double score_floor = 0.05;
};

struct ExperimentConfig {
    sim::WorldConfig world;
    std::vector<LevelSpec> anchor_levels;
    TrainConfig train;
    StrategyConfig strategy;
    FusionConfig fusion;
    EvalConfig eval;

    int effective_warmup() const {
        if (train.warmup_iters >= 0) return train.warmup_iters;
        return strategy.kind == StrategyKind::SoftLabel ? 3000 : 500;
    }
};

}  // namespace lad
