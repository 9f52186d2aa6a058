#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmon/analytics.hpp"

namespace actmon {

enum class Gate : std::size_t { forget = 0, input = 1, candidate = 2, output = 3 };

// Offsets into the flat parameter block: the four recurrent matrices
// (hidden x hidden), the four input matrices (hidden x input), the four
// biases, then the output head (horizon x hidden + horizon). Keeping every
// weight in one buffer lets Adam and the finite-difference check walk a
// single array.
struct LSTMLayout {
    std::size_t hidden = 0;
    std::size_t input = 0;
    std::size_t horizon = 0;

    std::size_t wh_offset(Gate g) const { return static_cast<std::size_t>(g) * hidden * hidden; }
    std::size_t wx_offset(Gate g) const {
        return 4 * hidden * hidden + static_cast<std::size_t>(g) * hidden * input;
    }
    std::size_t b_offset(Gate g) const {
        return 4 * hidden * (hidden + input) + static_cast<std::size_t>(g) * hidden;
    }
    std::size_t head_w_offset() const { return 4 * hidden * (hidden + input + 1); }
    std::size_t head_b_offset() const { return head_w_offset() + horizon * hidden; }
    std::size_t size() const { return head_b_offset() + horizon; }
};

// Read-only view of one cell's gate parameters inside the flat block.
struct LSTMCellParams {
    std::span<const double> flat;
    LSTMLayout layout;

    std::span<const double> weight_h(Gate g) const {
        return flat.subspan(layout.wh_offset(g), layout.hidden * layout.hidden);
    }
    std::span<const double> weight_x(Gate g) const {
        return flat.subspan(layout.wx_offset(g), layout.hidden * layout.input);
    }
    std::span<const double> bias(Gate g) const {
        return flat.subspan(layout.b_offset(g), layout.hidden);
    }
};

struct LSTMState {
    std::vector<double> h;
    std::vector<double> c;

    static LSTMState zeros(std::size_t hidden) { return {std::vector<double>(hidden, 0.0),
                                                         std::vector<double>(hidden, 0.0)}; }
};

// Gate activations kept for backpropagation through time.
struct StepCache {
    std::vector<double> x;
    std::vector<double> h_prev;
    std::vector<double> c_prev;
    std::vector<double> f;
    std::vector<double> i;
    std::vector<double> c_tilde;
    std::vector<double> o;
    std::vector<double> c;
    std::vector<double> tanh_c;
};

// One step of the gated recurrence:
//   f = sigmoid(W_fh h + W_fx x + b_f)      i = sigmoid(W_ih h + W_ix x + b_i)
//   c~ = tanh(W_ch h + W_cx x + b_c)        c = f*c_prev + i*c~
//   o = sigmoid(W_oh h + W_ox x + b_o)      h = o * tanh(c)
LSTMState cell_forward(const LSTMCellParams& params, std::span<const double> x,
                       const LSTMState& prev, StepCache* cache = nullptr);

struct MinMaxScaler {
    double lo = 0.0;
    double hi = 1.0;
    bool degenerate = false;  // hi == lo at fit time; everything maps to 0

    double scale(double v) const { return degenerate ? 0.0 : (v - lo) / (hi - lo); }
    double unscale(double s) const { return degenerate ? lo : lo + s * (hi - lo); }
};

MinMaxScaler fit_scaler(std::span<const double> values);

struct ForecastConfig {
    std::size_t hidden = 32;
    std::size_t lookback = 21;
    std::size_t horizon = 7;
    std::size_t epochs = 500;
    double learning_rate = 1e-3;
    double train_ratio = 0.8;
    std::uint64_t seed = 0;
};

struct ForecastModel {
    ForecastConfig config;
    MinMaxScaler scaler;
    std::vector<double> params;  // size layout().size()

    LSTMLayout layout() const { return {config.hidden, 1, config.horizon}; }
    LSTMCellParams cell() const { return {params, layout()}; }
};

// Unrolls the cell from a zero state over exactly `lookback` scaled inputs
// and applies the affine head to the final hidden state.
std::vector<double> forward_sequence(const ForecastModel& model, std::span<const double> window);

struct SequenceSample {
    std::vector<double> window;  // lookback scaled values
    std::vector<double> target;  // horizon scaled values
};

// Mean-squared-error loss over the batch and its exact gradient via reverse
// accumulation through the unrolled steps. grad must have layout.size()
// entries; it is overwritten.
double bptt_gradients(std::span<const double> params, const LSTMLayout& layout,
                      std::span<const SequenceSample> batch, std::span<double> grad);

struct TrainReport {
    double final_train_loss = 0.0;  // scaled space
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
    bool degenerate_scale = false;
};

ForecastModel train_forecaster(const DailySeries& series, const ForecastConfig& config,
                               TrainReport* report = nullptr);

struct ForecastSkill {
    double model_mse = 0.0;        // raw units, held-out windows
    double persistence_mse = 0.0;  // repeat-last-value baseline
};

// Re-derives the chronological split used by train_forecaster and scores the
// held-out windows in raw units.
ForecastSkill evaluate_forecaster(const ForecastModel& model, const DailySeries& series);

struct DeviationCheck {
    double mean = 0.0;
    double stddev = 0.0;
    double z_threshold = 3.0;
};

struct ForecastResult {
    std::vector<double> values;        // raw units, clipped at zero
    std::vector<bool> deviation_flags; // |z| beyond threshold vs history
};

ForecastResult forecast(const ForecastModel& model, std::span<const double> recent_raw,
                        const std::optional<DeviationCheck>& check = std::nullopt);

std::string save_forecaster(const ForecastModel& model);
ForecastModel load_forecaster(const std::string& text);
void save_forecaster_file(const ForecastModel& model, const std::string& path);
ForecastModel load_forecaster_file(const std::string& path);

}  // namespace actmon
