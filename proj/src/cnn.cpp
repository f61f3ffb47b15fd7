#include "prograde/cnn.hpp"

#include "prograde/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

namespace prograde {

namespace {

using nlohmann::json;

struct Shapes {
    std::vector<int> conv_in_size;  // spatial size entering each conv block
    std::vector<int> conv_in_ch;
    int flat = 0;  // features entering the FC stack
};

Shapes compute_shapes(const NetworkConfig& c) {
    if (c.classes != 2) {
        throw std::invalid_argument("cnn: output layer must have exactly 2 units");
    }
    if (c.input_size < 1 || c.input_channels < 1) {
        throw std::invalid_argument("cnn: invalid input shape");
    }
    Shapes s;
    int size = c.input_size, ch = c.input_channels;
    for (const auto& block : c.conv_blocks) {
        if (block.kernel < 1 || block.kernel % 2 == 0) {
            throw std::invalid_argument("cnn: kernel size must be odd and positive");
        }
        if (size < 2) throw std::invalid_argument("cnn: architecture collapses");
        s.conv_in_size.push_back(size);
        s.conv_in_ch.push_back(ch);
        size /= 2;  // same-padding conv, then 2x2 stride-2 pool
        ch = block.channels;
    }
    s.flat = size * size * ch;
    return s;
}

void im2col(const double* in, int ch, int s, int k, Eigen::MatrixXd& cols) {
    const int pad = k / 2;
    cols.resize(ch * k * k, s * s);
    for (int c = 0; c < ch; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                int row = (c * k + ky) * k + kx;
                for (int oy = 0; oy < s; ++oy) {
                    int iy = oy + ky - pad;
                    for (int ox = 0; ox < s; ++ox) {
                        int ix = ox + kx - pad;
                        cols(row, oy * s + ox) =
                            (iy < 0 || ix < 0 || iy >= s || ix >= s)
                                ? 0.0
                                : in[(static_cast<std::size_t>(c) * s + iy) * s + ix];
                    }
                }
            }
        }
    }
}

void col2im_add(const Eigen::MatrixXd& dcols, int ch, int s, int k, double* dinput) {
    const int pad = k / 2;
    for (int c = 0; c < ch; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                int row = (c * k + ky) * k + kx;
                for (int oy = 0; oy < s; ++oy) {
                    int iy = oy + ky - pad;
                    if (iy < 0 || iy >= s) continue;
                    for (int ox = 0; ox < s; ++ox) {
                        int ix = ox + kx - pad;
                        if (ix < 0 || ix >= s) continue;
                        dinput[(static_cast<std::size_t>(c) * s + iy) * s + ix] +=
                            dcols(row, oy * s + ox);
                    }
                }
            }
        }
    }
}

struct SampleCache {
    std::vector<Eigen::MatrixXd> cols;       // im2col of each conv input
    std::vector<Eigen::MatrixXd> conv_pre;   // pre-ReLU, [out_ch, s*s]
    std::vector<Eigen::MatrixXd> pooled;     // [out_ch, q*q]
    std::vector<std::vector<int>> argmax;    // flat index per pooled element
    Eigen::VectorXd flat;
    std::vector<Eigen::VectorXd> fc_pre;
    std::vector<Eigen::VectorXd> fc_act;     // after ReLU + dropout
    std::vector<Eigen::VectorXd> drop_mask;  // scaled inverted-dropout mask
    Eigen::VectorXd probs;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

Eigen::VectorXd forward_sample(const Network& net, const Shapes& shapes,
                               const Eigen::VectorXd& x, Mode mode,
                               std::uint64_t dropout_seed, std::uint64_t sample,
                               SampleCache* cache) {
    const auto& cfg = net.config;
    Eigen::VectorXd current = x;
    SampleCache local;
    SampleCache& sc = cache ? *cache : local;
    sc.cols.resize(cfg.conv_blocks.size());
    sc.conv_pre.resize(cfg.conv_blocks.size());
    sc.pooled.resize(cfg.conv_blocks.size());
    sc.argmax.resize(cfg.conv_blocks.size());

    for (std::size_t l = 0; l < cfg.conv_blocks.size(); ++l) {
        const int s = shapes.conv_in_size[l];
        const int in_ch = shapes.conv_in_ch[l];
        const int k = cfg.conv_blocks[l].kernel;
        const int out_ch = cfg.conv_blocks[l].channels;
        im2col(current.data(), in_ch, s, k, sc.cols[l]);
        sc.conv_pre[l].noalias() = net.conv_w[l] * sc.cols[l];
        sc.conv_pre[l].colwise() += net.conv_b[l];

        const int q = s / 2;
        sc.pooled[l].resize(out_ch, q * q);
        sc.argmax[l].assign(static_cast<std::size_t>(out_ch) * q * q, 0);
        for (int oc = 0; oc < out_ch; ++oc) {
            for (int py = 0; py < q; ++py) {
                for (int px = 0; px < q; ++px) {
                    double best = -1e300;
                    int best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            int idx = (2 * py + dy) * s + (2 * px + dx);
                            double v = std::max(0.0, sc.conv_pre[l](oc, idx));
                            if (v > best) {
                                best = v;
                                best_idx = idx;
                            }
                        }
                    }
                    sc.pooled[l](oc, py * q + px) = best;
                    sc.argmax[l][(static_cast<std::size_t>(oc) * q + py) * q + px] =
                        best_idx;
                }
            }
        }
        // Flatten channel-major for the next layer.
        current.resize(static_cast<Eigen::Index>(out_ch) * q * q);
        for (int oc = 0; oc < out_ch; ++oc) {
            current.segment(static_cast<Eigen::Index>(oc) * q * q, q * q) =
                sc.pooled[l].row(oc).transpose();
        }
    }
    sc.flat = current;

    Rng drop_rng = Rng(dropout_seed).fork(sample);
    const std::size_t n_hidden = cfg.fc_sizes.size();
    sc.fc_pre.resize(n_hidden);
    sc.fc_act.resize(n_hidden);
    sc.drop_mask.resize(n_hidden);
    for (std::size_t l = 0; l < n_hidden; ++l) {
        sc.fc_pre[l].noalias() = net.fc_w[l] * current + net.fc_b[l];
        Eigen::VectorXd act = sc.fc_pre[l].cwiseMax(0.0);
        double p = l < cfg.fc_dropout.size() ? cfg.fc_dropout[l] : 0.0;
        sc.drop_mask[l] = Eigen::VectorXd::Ones(act.size());
        if (mode == Mode::Train && p > 0.0) {
            const double keep = 1.0 - p;
            for (Eigen::Index i = 0; i < act.size(); ++i) {
                sc.drop_mask[l](i) = drop_rng.uniform() < keep ? 1.0 / keep : 0.0;
            }
            act = act.cwiseProduct(sc.drop_mask[l]);
        }
        sc.fc_act[l] = act;
        current = act;
    }
    Eigen::VectorXd logits = net.fc_w.back() * current + net.fc_b.back();
    sc.probs = softmax(logits);
    return sc.probs;
}

Gradients zero_like(const Network& net) {
    Gradients g;
    for (const auto& w : net.conv_w) g.conv_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : net.conv_b) g.conv_b.push_back(Eigen::VectorXd::Zero(b.size()));
    for (const auto& w : net.fc_w) g.fc_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : net.fc_b) g.fc_b.push_back(Eigen::VectorXd::Zero(b.size()));
    return g;
}

void backward_sample(const Network& net, const Shapes& shapes,
                     const SampleCache& sc, const Eigen::VectorXd& y,
                     Gradients& g) {
    const auto& cfg = net.config;
    const Eigen::VectorXd& p = sc.probs;

    Eigen::VectorXd dlogits;
    if (cfg.loss == LossKind::MseOnSoftmax) {
        Eigen::VectorXd dp = 2.0 * (p - y);
        dlogits = p.cwiseProduct(dp) - p * p.dot(dp);
    } else {
        dlogits = p - y;
    }

    // FC stack.
    const std::size_t n_hidden = cfg.fc_sizes.size();
    Eigen::VectorXd d = dlogits;
    {
        const Eigen::VectorXd& in = n_hidden ? sc.fc_act.back() : sc.flat;
        g.fc_w.back().noalias() += d * in.transpose();
        g.fc_b.back() += d;
        d = net.fc_w.back().transpose() * d;
    }
    for (std::size_t li = n_hidden; li-- > 0;) {
        d = d.cwiseProduct(sc.drop_mask[li]);
        d = (sc.fc_pre[li].array() > 0.0).select(d, 0.0);
        const Eigen::VectorXd& in = li ? sc.fc_act[li - 1] : sc.flat;
        g.fc_w[li].noalias() += d * in.transpose();
        g.fc_b[li] += d;
        d = net.fc_w[li].transpose() * d;
    }

    // Conv stack.
    Eigen::VectorXd dcurrent = d;  // gradient wrt flattened pooled output
    for (std::size_t l = cfg.conv_blocks.size(); l-- > 0;) {
        const int s = shapes.conv_in_size[l];
        const int in_ch = shapes.conv_in_ch[l];
        const int k = cfg.conv_blocks[l].kernel;
        const int out_ch = cfg.conv_blocks[l].channels;
        const int q = s / 2;

        Eigen::MatrixXd dpre = Eigen::MatrixXd::Zero(out_ch, s * s);
        for (int oc = 0; oc < out_ch; ++oc) {
            for (int pi = 0; pi < q * q; ++pi) {
                int idx = sc.argmax[l][static_cast<std::size_t>(oc) * q * q + pi];
                double gp = dcurrent(static_cast<Eigen::Index>(oc) * q * q + pi);
                if (sc.conv_pre[l](oc, idx) > 0.0) dpre(oc, idx) += gp;
            }
        }
        g.conv_w[l].noalias() += dpre * sc.cols[l].transpose();
        g.conv_b[l] += dpre.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd dcols = net.conv_w[l].transpose() * dpre;
        Eigen::VectorXd dinput =
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(in_ch) * s * s);
        col2im_add(dcols, in_ch, s, k, dinput.data());
        dcurrent = dinput;
    }
}

double sample_loss(const NetworkConfig& cfg, const Eigen::VectorXd& p,
                   const Eigen::VectorXd& y) {
    if (cfg.loss == LossKind::MseOnSoftmax) return (p - y).squaredNorm();
    double loss = 0.0;
    for (Eigen::Index c = 0; c < y.size(); ++c) {
        if (y(c) > 0) loss -= y(c) * std::log(std::max(p(c), 1e-300));
    }
    return loss;
}

void add_gradients(Gradients& into, const Gradients& from) {
    for (std::size_t i = 0; i < into.conv_w.size(); ++i) into.conv_w[i] += from.conv_w[i];
    for (std::size_t i = 0; i < into.conv_b.size(); ++i) into.conv_b[i] += from.conv_b[i];
    for (std::size_t i = 0; i < into.fc_w.size(); ++i) into.fc_w[i] += from.fc_w[i];
    for (std::size_t i = 0; i < into.fc_b.size(); ++i) into.fc_b[i] += from.fc_b[i];
}

void scale_gradients(Gradients& g, double s) {
    for (auto& m : g.conv_w) m *= s;
    for (auto& v : g.conv_b) v *= s;
    for (auto& m : g.fc_w) m *= s;
    for (auto& v : g.fc_b) v *= s;
}

template <typename Fn>
void for_each_tensor(Network& net, Fn fn) {
    for (std::size_t i = 0; i < net.conv_w.size(); ++i) {
        fn("conv_w[" + std::to_string(i) + "]", net.conv_w[i]);
        Eigen::MatrixXd b = net.conv_b[i];
        fn("conv_b[" + std::to_string(i) + "]", b);
        net.conv_b[i] = b.col(0);
    }
    for (std::size_t i = 0; i < net.fc_w.size(); ++i) {
        fn("fc_w[" + std::to_string(i) + "]", net.fc_w[i]);
        Eigen::MatrixXd b = net.fc_b[i];
        fn("fc_b[" + std::to_string(i) + "]", b);
        net.fc_b[i] = b.col(0);
    }
}

} // namespace

Network build_network(const NetworkConfig& config, std::uint64_t seed) {
    Shapes shapes = compute_shapes(config);
    Network net;
    net.config = config;
    Rng rng(seed);
    auto init = [&](Eigen::MatrixXd& w, int fan_in) {
        double bound = std::sqrt(3.0 / std::max(1, fan_in));
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                w(r, c) = rng.uniform(-bound, bound);
            }
        }
    };
    for (std::size_t l = 0; l < config.conv_blocks.size(); ++l) {
        int k = config.conv_blocks[l].kernel;
        int fan_in = shapes.conv_in_ch[l] * k * k;
        Eigen::MatrixXd w(config.conv_blocks[l].channels, fan_in);
        init(w, fan_in);
        net.conv_w.push_back(std::move(w));
        net.conv_b.push_back(Eigen::VectorXd::Zero(config.conv_blocks[l].channels));
    }
    int in = shapes.flat;
    for (int width : config.fc_sizes) {
        Eigen::MatrixXd w(width, in);
        init(w, in);
        net.fc_w.push_back(std::move(w));
        net.fc_b.push_back(Eigen::VectorXd::Zero(width));
        in = width;
    }
    Eigen::MatrixXd w(config.classes, in);
    init(w, in);
    net.fc_w.push_back(std::move(w));
    net.fc_b.push_back(Eigen::VectorXd::Zero(config.classes));
    return net;
}

std::size_t parameter_count(const Network& net) {
    std::size_t n = 0;
    for (const auto& w : net.conv_w) n += w.size();
    for (const auto& b : net.conv_b) n += b.size();
    for (const auto& w : net.fc_w) n += w.size();
    for (const auto& b : net.fc_b) n += b.size();
    return n;
}

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& batch,
                        Mode mode, std::uint64_t dropout_seed) {
    Shapes shapes = compute_shapes(net.config);
    const Eigen::Index expected =
        static_cast<Eigen::Index>(net.config.input_size) * net.config.input_size *
        net.config.input_channels;
    if (batch.rows() != expected) {
        throw std::invalid_argument("cnn: batch shape mismatch");
    }
    Eigen::MatrixXd probs(net.config.classes, batch.cols());
    for (Eigen::Index i = 0; i < batch.cols(); ++i) {
        probs.col(i) = forward_sample(net, shapes, batch.col(i), mode,
                                      dropout_seed, static_cast<std::uint64_t>(i),
                                      nullptr);
    }
    return probs;
}

std::pair<double, Gradients> loss_and_gradients(const Network& net,
                                                const Eigen::MatrixXd& batch,
                                                const Eigen::MatrixXd& labels,
                                                std::uint64_t dropout_seed) {
    Shapes shapes = compute_shapes(net.config);
    const Eigen::Index expected =
        static_cast<Eigen::Index>(net.config.input_size) * net.config.input_size *
        net.config.input_channels;
    if (batch.rows() != expected || labels.rows() != net.config.classes ||
        labels.cols() != batch.cols()) {
        throw std::invalid_argument("cnn: batch shape mismatch");
    }
    const int n = static_cast<int>(batch.cols());

    // Fixed chunking by sample index keeps the reduction order (and hence
    // the floating-point result) independent of the machine's core count.
    const int chunks = std::min(8, n);
    std::vector<Gradients> partial;
    std::vector<double> partial_loss(chunks, 0.0);
    partial.reserve(chunks);
    for (int c = 0; c < chunks; ++c) partial.push_back(zero_like(net));

    auto work = [&](int c) {
        int lo = static_cast<int>(static_cast<long long>(n) * c / chunks);
        int hi = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
        SampleCache cache;
        for (int i = lo; i < hi; ++i) {
            Eigen::VectorXd x = batch.col(i);
            forward_sample(net, shapes, x, Mode::Train, dropout_seed,
                           static_cast<std::uint64_t>(i), &cache);
            partial_loss[c] += sample_loss(net.config, cache.probs, labels.col(i));
            backward_sample(net, shapes, cache, labels.col(i), partial[c]);
        }
    };
    if (chunks > 1) {
        std::vector<std::thread> threads;
        for (int c = 0; c < chunks; ++c) threads.emplace_back(work, c);
        for (auto& t : threads) t.join();
    } else {
        work(0);
    }

    double loss = 0.0;
    Gradients g = zero_like(net);
    for (int c = 0; c < chunks; ++c) {
        loss += partial_loss[c];
        add_gradients(g, partial[c]);
    }
    loss /= n;
    scale_gradients(g, 1.0 / n);
    return {loss, std::move(g)};
}

TrainResult train(Network& net, const Eigen::MatrixXd& patches,
                  const std::vector<int>& labels, const TrainConfig& config) {
    if (config.batch_size < 1) throw std::invalid_argument("cnn: batch size must be >= 1");
    if (patches.cols() != static_cast<Eigen::Index>(labels.size()) ||
        labels.empty()) {
        throw std::invalid_argument("cnn: dataset shape mismatch");
    }
    std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw std::invalid_argument("cnn: degenerate labels");

    const int n = static_cast<int>(labels.size());
    Rng rng(config.seed);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto reshuffle = [&] {
        if (!config.shuffle) return;
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[i], order[j]);
        }
    };
    reshuffle();

    TrainResult result;
    result.loss_history.reserve(config.iterations);
    int cursor = 0;
    const int bs = std::min(config.batch_size, n);
    Eigen::MatrixXd batch(patches.rows(), bs);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(net.config.classes, bs);
    for (int iter = 0; iter < config.iterations; ++iter) {
        y.setZero();
        for (int i = 0; i < bs; ++i) {
            if (cursor >= n) {
                cursor = 0;
                reshuffle();
            }
            int idx = order[cursor++];
            batch.col(i) = patches.col(idx);
            y(labels[idx], i) = 1.0;
        }
        auto [loss, grads] = loss_and_gradients(net, batch, y,
                                                rng.fork(1000 + iter).next_u64());
        result.loss_history.push_back(loss);
        if (config.learning_rate != 0.0) {
            for (std::size_t l = 0; l < net.conv_w.size(); ++l) {
                net.conv_w[l] -= config.learning_rate * grads.conv_w[l];
                net.conv_b[l] -= config.learning_rate * grads.conv_b[l];
            }
            for (std::size_t l = 0; l < net.fc_w.size(); ++l) {
                net.fc_w[l] -= config.learning_rate * grads.fc_w[l];
                net.fc_b[l] -= config.learning_rate * grads.fc_b[l];
            }
        }
    }
    return result;
}

double gradient_check(const Network& net, const Eigen::MatrixXd& batch,
                      const Eigen::MatrixXd& labels, double h, int n_params,
                      std::uint64_t seed) {
    const std::uint64_t dropout_seed = 42;
    auto [loss0, analytic] = loss_and_gradients(net, batch, labels, dropout_seed);
    (void)loss0;

    // Flat index space over all parameters.
    std::vector<std::pair<double*, double>> entries;  // (param ptr, analytic grad)
    Network copy = net;
    auto collect = [&](auto& tensors, auto& grads) {
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            for (Eigen::Index i = 0; i < tensors[t].size(); ++i) {
                entries.emplace_back(tensors[t].data() + i, grads[t].data()[i]);
            }
        }
    };
    collect(copy.conv_w, analytic.conv_w);
    collect(copy.conv_b, analytic.conv_b);
    collect(copy.fc_w, analytic.fc_w);
    collect(copy.fc_b, analytic.fc_b);

    Rng rng(seed);
    const std::size_t total = entries.size();
    const std::size_t want = std::min<std::size_t>(total, static_cast<std::size_t>(n_params));
    std::set<std::size_t> chosen;
    while (chosen.size() < want) chosen.insert(rng.below(total));

    double max_rel = 0.0;
    for (std::size_t idx : chosen) {
        double* p = entries[idx].first;
        const double a = entries[idx].second;
        const double orig = *p;
        *p = orig + h;
        double fp = loss_and_gradients(copy, batch, labels, dropout_seed).first;
        *p = orig - h;
        double fm = loss_and_gradients(copy, batch, labels, dropout_seed).first;
        *p = orig;
        double numeric = (fp - fm) / (2.0 * h);
        double rel = std::abs(a - numeric) /
                     std::max(std::abs(a) + std::abs(numeric), 1e-4);
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

namespace {

json config_to_json(const NetworkConfig& c) {
    json j;
    j["input_size"] = c.input_size;
    j["input_channels"] = c.input_channels;
    j["conv_blocks"] = json::array();
    for (const auto& b : c.conv_blocks) j["conv_blocks"].push_back({b.kernel, b.channels});
    j["fc_sizes"] = c.fc_sizes;
    j["classes"] = c.classes;
    j["fc_dropout"] = c.fc_dropout;
    j["loss"] = c.loss == LossKind::MseOnSoftmax ? "mse_softmax" : "cross_entropy";
    return j;
}

NetworkConfig config_from_json(const json& j) {
    NetworkConfig c;
    c.input_size = j.at("input_size").get<int>();
    c.input_channels = j.at("input_channels").get<int>();
    c.conv_blocks.clear();
    for (const auto& b : j.at("conv_blocks")) {
        c.conv_blocks.push_back({b[0].get<int>(), b[1].get<int>()});
    }
    c.fc_sizes = j.at("fc_sizes").get<std::vector<int>>();
    c.classes = j.at("classes").get<int>();
    c.fc_dropout = j.at("fc_dropout").get<std::vector<double>>();
    std::string loss = j.at("loss").get<std::string>();
    c.loss = loss == "mse_softmax" ? LossKind::MseOnSoftmax : LossKind::CrossEntropy;
    return c;
}

bool host_little_endian() {
    const std::uint16_t probe = 1;
    return *reinterpret_cast<const std::uint8_t*>(&probe) == 1;
}

void swap_doubles(std::vector<double>& values) {
    for (auto& v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        bits = __builtin_bswap64(bits);
        std::memcpy(&v, &bits, 8);
    }
}

} // namespace

void save_weights(const Network& net, const std::filesystem::path& path) {
    json header;
    header["format_version"] = 1;
    header["config"] = config_to_json(net.config);
    header["shapes"] = json::array();
    Network& mutable_net = const_cast<Network&>(net);
    std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
    for_each_tensor(mutable_net, [&](const std::string& name, Eigen::MatrixXd& t) {
        header["shapes"].push_back({name, t.rows(), t.cols()});
        tensors.emplace_back(name, t);
    });

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("weights: cannot open for write: " + path.string());
    out << header.dump() << "\n";
    for (const auto& [name, t] : tensors) {
        std::vector<double> values(t.data(), t.data() + t.size());
        if (!host_little_endian()) swap_doubles(values);
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * 8));
    }
    if (!out) throw std::runtime_error("weights: write failed: " + path.string());
}

Network load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("weights: cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("weights: truncated file");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error("weights: corrupt header: " + std::string(e.what()));
    }
    if (header.at("format_version").get<int>() != 1) {
        throw std::runtime_error("weights: unsupported format version");
    }
    NetworkConfig config = config_from_json(header.at("config"));
    Network net = build_network(config, 0);

    const auto& shapes = header.at("shapes");
    std::size_t cursor = 0;
    std::string error;
    for_each_tensor(net, [&](const std::string& name, Eigen::MatrixXd& t) {
        if (!error.empty()) return;
        if (cursor >= shapes.size()) {
            error = "weights: header shape list too short at " + name;
            return;
        }
        const auto& s = shapes[cursor++];
        if (s[0].get<std::string>() != name ||
            s[1].get<Eigen::Index>() != t.rows() ||
            s[2].get<Eigen::Index>() != t.cols()) {
            error = "weights: shape mismatch at " + name;
            return;
        }
        std::vector<double> values(static_cast<std::size_t>(t.size()));
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * 8));
        if (in.gcount() != static_cast<std::streamsize>(values.size() * 8)) {
            error = "weights: truncated file at " + name;
            return;
        }
        if (!host_little_endian()) swap_doubles(values);
        std::copy(values.begin(), values.end(), t.data());
    });
    if (!error.empty()) throw std::runtime_error(error);
    return net;
}

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(classes, labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) {
            throw std::invalid_argument("cnn: label out of range");
        }
        y(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
    }
    return y;
}

} // namespace prograde
