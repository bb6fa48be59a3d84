#pragma once

#include "medaudit/classifier.hpp"
#include "medaudit/dataset.hpp"
#include "medaudit/density_ratio.hpp"
#include "medaudit/json.hpp"
#include "medaudit/mediator_sampler.hpp"

#include <memory>
#include <span>
#include <vector>

namespace medaudit {

// mu(a, m, w) = P(Y = 1 | A = a, M = m, W = w)
class OutcomeModel {
public:
    virtual ~OutcomeModel() = default;
    virtual double predict(int a, std::span<const double> m, std::span<const double> w) const = 0;
    virtual Json to_json() const = 0;
};

// P(A = 1 | W = w), before clipping.
class PropensityModel {
public:
    virtual ~PropensityModel() = default;
    virtual double predict(std::span<const double> w) const = 0;
    virtual Json to_json() const = 0;
};

// r(m, w) = f(m | A=1, w) / f(m | A=0, w), clipped.
class RatioModel {
public:
    virtual ~RatioModel() = default;
    virtual RatioValue evaluate(std::span<const double> m, std::span<const double> w) const = 0;
    virtual Json to_json() const = 0;
};

// Outcome classifier on features [a, m..., w...].
class ClassifierOutcome final : public OutcomeModel {
public:
    explicit ClassifierOutcome(Classifier c) : classifier_(std::move(c)) {}
    double predict(int a, std::span<const double> m, std::span<const double> w) const override;
    Json to_json() const override { return classifier_.to_json(); }

private:
    Classifier classifier_;
};

class ClassifierPropensity final : public PropensityModel {
public:
    explicit ClassifierPropensity(Classifier c) : classifier_(std::move(c)) {}
    double predict(std::span<const double> w) const override { return classifier_.predict(w); }
    Json to_json() const override { return classifier_.to_json(); }

private:
    Classifier classifier_;
};

class ClassifierRatio final : public RatioModel {
public:
    explicit ClassifierRatio(DensityRatioModel m) : model_(std::move(m)) {}
    RatioValue evaluate(std::span<const double> m, std::span<const double> w) const override {
        return model_.evaluate(m, w);
    }
    Json to_json() const override { return model_.to_json(); }

private:
    DensityRatioModel model_;
};

struct NuisanceConfig {
    LearnerSpec outcome;
    LearnerSpec propensity;
    LearnerSpec ratio;
    double probability_clip = 0.01;  // pi and classifier outputs to [c, 1 - c]
    double ratio_clip = 0.01;        // ratios to [c, 1 / c]
    SamplerOptions sampler;
};

Json to_json(const NuisanceConfig& config);
NuisanceConfig nuisance_config_from_json(const Json& j);

struct FoldNuisance {
    int fold = 0;
    std::vector<std::size_t> train_units;  // sorted; never contains a unit of `fold`
    std::shared_ptr<const OutcomeModel> mu;
    std::shared_ptr<const PropensityModel> pi;
    std::shared_ptr<const RatioModel> ratio;
    std::shared_ptr<const MediatorDistribution> sampler;
};

struct NuisanceSet {
    NuisanceConfig config;
    std::vector<FoldNuisance> folds;  // folds[f - 1] scores units of fold f

    const FoldNuisance& for_fold(int fold) const;
    Json to_json() const;
};

// Trains every fold's models on that fold's complement; folds in parallel.
NuisanceSet fit_nuisances(const AuditDataset& dataset, const FoldAssignment& folds, const NuisanceConfig& config,
                          unsigned threads = 1);

// Models for a single training subset.
FoldNuisance fit_fold_nuisance(const AuditDataset& dataset, const std::vector<std::size_t>& train_units,
                               const NuisanceConfig& config, int fold);

}  // namespace medaudit
