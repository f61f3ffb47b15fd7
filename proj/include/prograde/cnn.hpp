#ifndef PROGRADE_CNN_HPP
#define PROGRADE_CNN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace prograde {

enum class LossKind { MseOnSoftmax, CrossEntropy };

struct ConvBlock {
    int kernel = 3;
    int channels = 8;
};

// Convolution blocks are kernel-size-k same-padding convolutions, each
// followed by ReLU and a 2x2 stride-2 max-pool. Fully connected hidden
// layers use ReLU plus inverted dropout; the output layer is a softmax
// over `classes` units.
struct NetworkConfig {
    int input_size = 256;  // square input
    int input_channels = 1;
    std::vector<ConvBlock> conv_blocks = {{3, 8},  {3, 16}, {3, 32},
                                          {3, 32}, {3, 64}, {3, 64}};
    std::vector<int> fc_sizes = {256, 64};
    int classes = 2;
    std::vector<double> fc_dropout = {0.75, 0.75};  // drop probability per FC layer
    LossKind loss = LossKind::MseOnSoftmax;
};

struct Network {
    NetworkConfig config;
    std::vector<Eigen::MatrixXd> conv_w;  // [out_ch, in_ch*k*k]
    std::vector<Eigen::VectorXd> conv_b;
    std::vector<Eigen::MatrixXd> fc_w;    // hidden layers then the output layer
    std::vector<Eigen::VectorXd> fc_b;
};

struct Gradients {
    std::vector<Eigen::MatrixXd> conv_w;
    std::vector<Eigen::VectorXd> conv_b;
    std::vector<Eigen::MatrixXd> fc_w;
    std::vector<Eigen::VectorXd> fc_b;
};

enum class Mode { Train, Infer };

// Seeded fan-in-scaled uniform initialization; biases start at zero.
// Throws "architecture collapses" if the pools exhaust the spatial size.
Network build_network(const NetworkConfig& config, std::uint64_t seed);

std::size_t parameter_count(const Network& net);

// batch: one flattened patch per column, channel-major then row-major
// (values expected in [0,1]). Returns class probabilities per column.
// Train mode applies inverted dropout with per-sample seeded masks.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& batch,
                        Mode mode, std::uint64_t dropout_seed = 0);

// labels: one-hot, classes x batch. Loss is the batch mean of the summed
// squared probability error (or cross-entropy when configured). Dropout
// masks depend only on (dropout_seed, sample index), so repeated calls are
// a fixed function of the parameters.
std::pair<double, Gradients> loss_and_gradients(const Network& net,
                                                const Eigen::MatrixXd& batch,
                                                const Eigen::MatrixXd& labels,
                                                std::uint64_t dropout_seed = 0);

struct TrainConfig {
    int batch_size = 100;
    double learning_rate = 0.01;
    int iterations = 1000;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct TrainResult {
    std::vector<double> loss_history;  // one entry per iteration
};

// Plain SGD over seeded shuffled batches. Throws "degenerate labels" when
// the dataset holds a single class.
TrainResult train(Network& net, const Eigen::MatrixXd& patches,
                  const std::vector<int>& labels, const TrainConfig& config);

// Max relative error between analytic and central finite-difference
// gradients over >= n_params randomly sampled parameters.
double gradient_check(const Network& net, const Eigen::MatrixXd& batch,
                      const Eigen::MatrixXd& labels, double h = 1e-5,
                      int n_params = 200, std::uint64_t seed = 1);

// Text header (config echo + tensor shapes) followed by little-endian
// 64-bit floats in declaration order; round-trip is bit-exact.
void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path);

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes);

} // namespace prograde

#endif
