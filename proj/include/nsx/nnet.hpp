#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsx/dataset.hpp"
#include "nsx/value.hpp"

namespace nsx {

struct TrainConfig {
    std::vector<int> hidden = {64};
    int batch_size = 128;
    double learning_rate = 1e-2;
    int max_epochs = 200;
    int patience = 5; // early stopping: validation evaluations without improvement
    double validation_fraction = 0.2;
    uint64_t seed = 1;
};

struct ColumnStats {
    double mean = 0.0;
    double stdev = 1.0; // constant columns are stored with stdev 1
};

// Feed-forward network with rectifier hidden layers and identity output,
// plus the standardization metadata for its named inputs and outputs.
// Immutable after training; safe to share across threads.
struct MlpModel {
    std::vector<int> layer_sizes;             // input dim, hidden dims..., output dim
    std::vector<std::vector<double>> weights; // per layer, row-major [out x in]
    std::vector<std::vector<double>> biases;  // per layer [out]
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    std::vector<ColumnStats> input_stats;
    std::vector<ColumnStats> output_stats;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }

    // Shape chaining, name/dim agreement, positive stdevs, finite weights.
    void validate() const;
};

// Forward pass on raw inputs (standardize, layers, de-standardize).
std::vector<double> predict_raw(const MlpModel& m, const std::vector<double>& x);

// Assignment-level prediction; throws EvalError when an input binding is
// missing or non-numeric. Outputs are bound as Real values.
Assignment predict(const MlpModel& m, const Assignment& a);

// d(downstream . outputs)/d(inputs) by backpropagation, including the
// standardization transform on both ends. downstream has output_dim entries.
std::vector<double> input_gradient(const MlpModel& m, const std::vector<double>& x,
                                   const std::vector<double>& downstream);

// Output matching rule shared by accuracy and the solvers: integer outputs
// must round to the same integer; real outputs must agree within relative
// tolerance 1e-2 (absolute 1e-2 near zero).
bool value_matches(Kind kind, double predicted, double actual);

// Fraction of held-out rows where every output matches under value_matches.
double accuracy(const MlpModel& m, const Dataset& held_out);

// Input influence scores: L1 norm of the product of absolute weight matrices
// restricted to each input column; sorted descending.
std::vector<std::pair<std::string, double>> explain(const MlpModel& m);

void save(const MlpModel& m, const std::string& path);
MlpModel load(const std::string& path);
std::string save_to_string(const MlpModel& m);
MlpModel load_from_string(const std::string& text);

struct TrainReport {
    int epochs_run = 0;
    double final_train_loss = 0.0;
    std::vector<double> val_curve; // standardized validation MSE per epoch
    double accuracy = 0.0;         // on the internal validation split
    bool stopped_early = false;
};

// Mini-batch gradient descent on mean squared error over standardized
// outputs. Validation runs every epoch on an internal seeded split; training
// stops early after `patience` evaluations without improvement and the
// best-validation snapshot is returned. Deterministic for a fixed seed.
std::pair<MlpModel, TrainReport> train(const Dataset& data, const std::vector<std::string>& inputs,
                                       const std::vector<std::string>& outputs,
                                       const TrainConfig& cfg = {});

} // namespace nsx
