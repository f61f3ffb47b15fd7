#include "prograde/cnn.hpp"
#include "prograde/colorspace.hpp"
#include "prograde/grading.hpp"
#include "prograde/nuclei.hpp"
#include "prograde/patterns.hpp"
#include "prograde/png_io.hpp"
#include "prograde/rng.hpp"
#include "prograde/slide.hpp"
#include "prograde/stain.hpp"
#include "prograde/synth.hpp"
#include "prograde/tumor_mask.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace prograde;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Provenance {
    std::string command;
    bool timestamps = false;
};

// Reports carry the full command and seeds so any artifact can be
// regenerated; wall-clock time only on request, to keep runs byte-identical.
void write_provenance(const Provenance& prov, const fs::path& target) {
    std::ofstream out(target);
    if (!out) throw std::runtime_error("cannot write provenance: " + target.string());
    out << "command: " << prov.command << "\n";
    out << "version: " << kVersion << "\n";
    if (prov.timestamps) {
        const auto now = std::chrono::system_clock::now();
        out << "timestamp: "
            << std::chrono::duration_cast<std::chrono::seconds>(
                   now.time_since_epoch())
                   .count()
            << "\n";
    }
}

fs::path provenance_path(const fs::path& output) {
    if (fs::is_directory(output)) return output / "provenance.txt";
    return fs::path(output.string() + ".provenance.txt");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<ConvBlock> parse_conv(const std::string& text) {
    std::vector<ConvBlock> blocks;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto sep = item.find('x');
        if (sep == std::string::npos) {
            throw std::runtime_error("bad --conv entry \"" + item +
                                     "\" (expected KERNELxCHANNELS)");
        }
        blocks.push_back({std::stoi(item.substr(0, sep)),
                          std::stoi(item.substr(sep + 1))});
    }
    if (blocks.empty()) throw std::runtime_error("--conv must name at least one block");
    return blocks;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if constexpr (std::is_same_v<T, int>) {
            out.push_back(std::stoi(item));
        } else {
            out.push_back(std::stod(item));
        }
    }
    return out;
}

TissueMask mask_for(const SlidePackage& slide, const std::string& mask_file) {
    const fs::path path = mask_file.empty() ? slide.root / "mask.png" : fs::path(mask_file);
    if (!fs::exists(path)) {
        throw std::runtime_error("missing tumor mask " + path.string() +
                                 " (run the mask subcommand first)");
    }
    return read_mask(path, slide.lowest_level().level);
}

// Moment of the level-0 OD pixels under the mask (all pixels if none).
Eigen::Matrix3d masked_moment(const SlidePackage& slide, const OdImage& od,
                              const TissueMask* mask) {
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    std::size_t count = 0;
    const int ds = mask ? slide.level_info(mask->level).downsample : 1;
    for (int y = 0; y < od.height; ++y) {
        for (int x = 0; x < od.width; ++x) {
            if (mask) {
                const int mx = std::min(x / ds, mask->width - 1);
                const int my = std::min(y / ds, mask->height - 1);
                if (mask->at(mx, my) != 1) continue;
            }
            Eigen::Vector3d o(od.at(x, y, 0), od.at(x, y, 1), od.at(x, y, 2));
            g.noalias() += o * o.transpose();
            ++count;
        }
    }
    if (count == 0) throw std::runtime_error("empty tumor mask");
    return g / static_cast<double>(count);
}

void write_patch_overlay(const PreparedSlide& ps, const SlideGrade& grade,
                         int patch_size, const fs::path& path) {
    OverlayRegion grade3{{}, 40, 200, 60};
    OverlayRegion grade4{{}, 60, 80, 255};
    for (const auto& vote : grade.patch_votes) {
        auto& region = vote.predicted == 0 ? grade3 : grade4;
        for (int dy = 0; dy < patch_size; ++dy) {
            for (int dx = 0; dx < patch_size; ++dx) {
                region.pixels.push_back({vote.x + dx, vote.y + dy});
            }
        }
    }
    write_overlay(ps.slide, 0, {grade3, grade4}, path);
}

int run_gradcheck(const std::string& out_file, const Provenance& prov) {
    // energy gradient vs central finite differences, 100 random cases
    StainModel model = default_stain_model();
    Rng rng(17);
    double energy_max_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        model.lambda = std::pow(10.0, rng.uniform(-2.0, 2.0));
        OdImage od(4, 4);
        for (auto& v : od.values) v = rng.uniform(0.0, 2.0);
        const Eigen::Matrix3d g = second_moment(od);
        Eigen::Matrix3d d;
        for (int i = 0; i < 9; ++i) d(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
        const EnergyReport rep = energy_from_moment(d, g, model);
        Eigen::Matrix<double, 9, 1> fd;
        const double h = 1e-6;
        for (int i = 0; i < 9; ++i) {
            Eigen::Matrix3d dp = d, dm = d;
            dp(i / 3, i % 3) += h;
            dm(i / 3, i % 3) -= h;
            fd(i) = (energy_from_moment(dp, g, model).total -
                     energy_from_moment(dm, g, model).total) /
                    (2 * h);
        }
        const double rel =
            (rep.gradient - fd).norm() / std::max(1.0, fd.norm());
        energy_max_rel = std::max(energy_max_rel, rel);
    }

    // micro-CNN backprop vs finite differences on the tiny config
    NetworkConfig cfg;
    cfg.input_size = 8;
    cfg.conv_blocks = {{3, 2}, {3, 3}};
    cfg.fc_sizes = {6};
    cfg.fc_dropout = {0.5};
    double cnn_max_rel = 0.0;
    for (LossKind loss : {LossKind::MseOnSoftmax, LossKind::CrossEntropy}) {
        cfg.loss = loss;
        Network net = build_network(cfg, 23);
        Rng brng(29);
        Eigen::MatrixXd batch(64, 4);
        for (Eigen::Index i = 0; i < batch.size(); ++i) {
            batch(i) = brng.uniform(0.05, 0.95);
        }
        const Eigen::MatrixXd labels = one_hot({0, 1, 0, 1}, 2);
        cnn_max_rel = std::max(cnn_max_rel,
                               gradient_check(net, batch, labels, 1e-5, 200, 31));
    }

    std::ostringstream report;
    report << "gradcheck energy max_rel " << format_double(energy_max_rel) << "\n";
    report << "gradcheck cnn max_rel " << format_double(cnn_max_rel) << "\n";
    const bool ok = energy_max_rel < 1e-4 && cnn_max_rel < 1e-4;
    report << "gradcheck " << (ok ? "pass" : "fail") << "\n";
    std::cout << report.str();
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        out << report.str();
        write_provenance(prov, provenance_path(out_file));
    }
    if (!ok) throw std::runtime_error("gradcheck exceeded the 1e-4 bound");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"prostate slide pipeline: synthesis, masking, stain "
                 "decomposition, grading, pattern detection"};
    app.require_subcommand(1);
    bool timestamps = false;
    app.add_flag("--timestamps", timestamps,
                 "embed wall-clock timestamps in provenance records");

    std::string env_data_dir;
    if (const char* env = std::getenv("PROGRADE_DATA_DIR")) env_data_dir = env;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    std::string synth_out = env_data_dir;
    int per_class = 4, synth_size = 1024, synth_jobs = 1;
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", synth_out, "corpus directory")->required(env_data_dir.empty());
    synth->add_option("--per-class", per_class, "slides per class");
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--size", synth_size, "slide width/height in level-0 pixels");
    synth->add_option("--jobs", synth_jobs, "parallel slide renderers");

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "k-means tumor mask");
    std::string mask_slide, mask_out;
    int mask_k = 3;
    std::uint64_t mask_seed = 1;
    mask_cmd->add_option("slide", mask_slide, "slide package directory")->required();
    mask_cmd->add_option("--k", mask_k, "clusters (3, or 4 for pen markers)");
    mask_cmd->add_option("--seed", mask_seed, "k-means seed");
    mask_cmd->add_option("--out", mask_out, "mask PNG (default SLIDE/mask.png)");

    // decompose
    auto* dec = app.add_subcommand("decompose", "optimize the stain matrix and "
                                                "write the hematoxylin plane");
    std::string dec_slide, dec_mask, dec_out;
    double dec_lambda = 1.0;
    dec->add_option("slide", dec_slide, "slide package directory")->required();
    dec->add_option("--lambda", dec_lambda, "regularization weight");
    dec->add_option("--mask", dec_mask, "tumor mask PNG (default SLIDE/mask.png if present)");
    dec->add_option("--out", dec_out, "hematoxylin PNG (default SLIDE/hema.png)");

    // dataset
    auto* ds_cmd = app.add_subcommand("dataset", "build the weak-label patch set");
    std::string ds_corpus = env_data_dir, ds_out;
    int ds_patches = 100, ds_patch_size = 64, ds_k = 3;
    double ds_lambda = 1.0;
    std::uint64_t ds_seed = 1;
    ds_cmd->add_option("--corpus", ds_corpus, "corpus directory")->required(env_data_dir.empty());
    ds_cmd->add_option("--out", ds_out, "dataset file")->required();
    ds_cmd->add_option("--patches", ds_patches, "patches per train slide");
    ds_cmd->add_option("--patch-size", ds_patch_size, "patch edge in level-0 pixels");
    ds_cmd->add_option("--seed", ds_seed, "sampling seed");
    ds_cmd->add_option("--k", ds_k, "mask clusters");
    ds_cmd->add_option("--lambda", ds_lambda, "stain regularization weight");

    // train
    auto* tr = app.add_subcommand("train", "train the micro-CNN");
    std::string tr_data, tr_out, tr_loss = "mse", tr_conv = "3x8,3x16,3x32",
                tr_fc = "32", tr_dropout = "0.5";
    int tr_iters = 1000, tr_batch = 100;
    double tr_lr = 0.01;
    std::uint64_t tr_seed = 1, tr_init_seed = 2;
    tr->add_option("--data", tr_data, "dataset file")->required();
    tr->add_option("--out", tr_out, "weights file")->required();
    tr->add_option("--iters", tr_iters, "SGD iterations");
    tr->add_option("--lr", tr_lr, "learning rate");
    tr->add_option("--batch", tr_batch, "batch size");
    tr->add_option("--seed", tr_seed, "shuffle/dropout seed");
    tr->add_option("--init-seed", tr_init_seed, "weight init seed");
    tr->add_option("--loss", tr_loss, "mse|xent")
        ->check(CLI::IsMember({"mse", "xent"}));
    tr->add_option("--conv", tr_conv, "conv blocks, e.g. 3x8,3x16");
    tr->add_option("--fc", tr_fc, "hidden FC sizes, e.g. 32,16");
    tr->add_option("--dropout", tr_dropout, "drop probability per FC layer");

    // grade
    auto* gr = app.add_subcommand("grade", "majority-vote slide verdict");
    std::string gr_slide, gr_weights, gr_out, gr_overlay;
    int gr_patches = 500, gr_k = 3;
    double gr_lambda = 1.0;
    std::uint64_t gr_seed = 1;
    gr->add_option("slide", gr_slide, "slide package directory")->required();
    gr->add_option("--weights", gr_weights, "trained weights file")->required();
    gr->add_option("--patches", gr_patches, "patches to vote over");
    gr->add_option("--seed", gr_seed, "sampling seed");
    gr->add_option("--k", gr_k, "mask clusters");
    gr->add_option("--lambda", gr_lambda, "stain regularization weight");
    gr->add_option("--out", gr_out, "report file (default SLIDE/grade.txt)");
    gr->add_option("--overlay", gr_overlay, "per-class patch overlay PNG");

    // eval
    auto* ev = app.add_subcommand("eval", "grade every eval-split slide");
    std::string ev_corpus = env_data_dir, ev_weights, ev_out;
    int ev_patches = 500, ev_k = 3, ev_jobs = 1;
    double ev_lambda = 1.0;
    std::uint64_t ev_seed = 1;
    ev->add_option("--corpus", ev_corpus, "corpus directory")->required(env_data_dir.empty());
    ev->add_option("--weights", ev_weights, "trained weights file")->required();
    ev->add_option("--out", ev_out, "report file")->required();
    ev->add_option("--patches", ev_patches, "patches per slide");
    ev->add_option("--seed", ev_seed, "sampling seed");
    ev->add_option("--k", ev_k, "mask clusters");
    ev->add_option("--lambda", ev_lambda, "stain regularization weight");
    ev->add_option("--jobs", ev_jobs, "slides evaluated in parallel");

    // nucleoli
    auto* nu = app.add_subcommand("nucleoli", "prominent-nucleoli detector");
    std::string nu_slide, nu_out, nu_overlay;
    double nu_threshold = 50.0, nu_min_weight = 0.05, nu_lambda = 1.0;
    int nu_k = 3;
    std::uint64_t nu_seed = 1;
    nu->add_option("slide", nu_slide, "slide package directory")->required();
    nu->add_option("--threshold", nu_threshold, "mode separation threshold");
    nu->add_option("--min-weight", nu_min_weight, "minimum dark-mode weight");
    nu->add_option("--seed", nu_seed, "mask seed");
    nu->add_option("--k", nu_k, "mask clusters");
    nu->add_option("--lambda", nu_lambda, "stain regularization weight");
    nu->add_option("--out", nu_out, "report file (default SLIDE/nucleoli.txt)");
    nu->add_option("--overlay", nu_overlay, "overlay PNG of prominent nuclei");

    // cribriform
    auto* cr = app.add_subcommand("cribriform", "cribriform-pattern detector");
    std::string cr_slide, cr_out, cr_overlay;
    int cr_min_lumens = 3, cr_k = 3;
    double cr_roundness = 0.7, cr_lambda = 1.0;
    std::uint64_t cr_seed = 1;
    cr->add_option("slide", cr_slide, "slide package directory")->required();
    cr->add_option("--min-lumens", cr_min_lumens, "qualifying lumens per region");
    cr->add_option("--roundness", cr_roundness, "lumen roundness threshold");
    cr->add_option("--seed", cr_seed, "mask seed");
    cr->add_option("--k", cr_k, "mask clusters");
    cr->add_option("--lambda", cr_lambda, "stain regularization weight");
    cr->add_option("--out", cr_out, "report file (default SLIDE/cribriform.txt)");
    cr->add_option("--overlay", cr_overlay, "overlay PNG of detected regions");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "energy and CNN gradient suites");
    std::string gc_out;
    gc->add_option("--out", gc_out, "report file (default stdout only)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Provenance prov;
    for (int i = 0; i < argc; ++i) {
        if (i) prov.command += ' ';
        prov.command += argv[i];
    }
    prov.timestamps = timestamps;

    try {
        if (synth->parsed()) {
            auto entries = synth_corpus(per_class, synth_out, synth_seed,
                                        synth_size, synth_jobs);
            write_provenance(prov, fs::path(synth_out) / "provenance.txt");
            std::cout << "synth wrote " << entries.size() << " slides to "
                      << synth_out << "\n";
        } else if (mask_cmd->parsed()) {
            SlidePackage slide = open_slide(mask_slide);
            TissueMask mask = extract_tumor_mask(slide, mask_k, mask_seed);
            const fs::path out =
                mask_out.empty() ? slide.root / "mask.png" : fs::path(mask_out);
            write_mask(mask, out);
            write_provenance(prov, provenance_path(out));
            std::size_t tumor = 0;
            for (auto l : mask.labels) tumor += l == 1;
            std::cout << "mask " << slide.id() << " level " << mask.level
                      << " tumor_pixels " << tumor << "\n";
        } else if (dec->parsed()) {
            SlidePackage slide = open_slide(dec_slide);
            RgbImage rgb = read_region(slide, 0, 0, 0, slide.width, slide.height);
            OdImage od = rgb_to_od(rgb);
            TissueMask mask;
            const TissueMask* mask_ptr = nullptr;
            const fs::path mask_path =
                dec_mask.empty() ? slide.root / "mask.png" : fs::path(dec_mask);
            if (fs::exists(mask_path)) {
                mask = read_mask(mask_path, slide.lowest_level().level);
                mask_ptr = &mask;
            }
            StainModel model = default_stain_model();
            model.lambda = dec_lambda;
            StainModel optimized = optimize_stain_matrix_from_moment(
                masked_moment(slide, od, mask_ptr), model);
            slide.stain_record = StainRecord{optimized.D, dec_lambda, model.prior_id};
            write_manifest(slide);
            const fs::path out =
                dec_out.empty() ? slide.root / "hema.png" : fs::path(dec_out);
            write_png_gray(out,
                           hematoxylin_plane_to_image(apply_decomposition(od, optimized.D)));
            write_provenance(prov, provenance_path(out));
            std::cout << "decompose " << slide.id() << " lambda "
                      << format_double(dec_lambda) << " wrote " << out.string() << "\n";
        } else if (ds_cmd->parsed()) {
            auto entries = load_corpus_manifest(ds_corpus);
            PatchDataset ds = build_patch_dataset(entries, ds_corpus, ds_patches,
                                                  ds_patch_size, ds_seed, ds_k,
                                                  ds_lambda);
            save_patch_dataset(ds, ds_out);
            write_provenance(prov, provenance_path(ds_out));
            for (const auto& w : ds.warnings) std::cout << "warning: " << w << "\n";
            std::cout << "dataset train_slides " << ds.counts.train << " eval_slides "
                      << ds.counts.eval << " excluded_slides " << ds.counts.excluded
                      << " patches " << ds.patches.cols() << "\n";
        } else if (tr->parsed()) {
            PatchDataset ds = load_patch_dataset(tr_data);
            NetworkConfig cfg;
            cfg.input_size = ds.patch_size;
            cfg.conv_blocks = parse_conv(tr_conv);
            cfg.fc_sizes = parse_list<int>(tr_fc);
            cfg.fc_dropout = parse_list<double>(tr_dropout);
            cfg.loss = tr_loss == "mse" ? LossKind::MseOnSoftmax : LossKind::CrossEntropy;
            if (cfg.fc_dropout.size() != cfg.fc_sizes.size()) {
                throw std::runtime_error("--dropout must match --fc in length");
            }
            Network net = build_network(cfg, tr_init_seed);
            TrainConfig tc;
            tc.batch_size = tr_batch;
            tc.learning_rate = tr_lr;
            tc.iterations = tr_iters;
            tc.seed = tr_seed;
            TrainResult result = train(net, ds.patches, ds.labels, tc);
            save_weights(net, tr_out);
            std::ofstream log(tr_out + ".log");
            for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
                log << i << " " << format_double(result.loss_history[i]) << "\n";
            }
            write_provenance(prov, provenance_path(tr_out));
            std::cout << "train iterations " << tr_iters << " final_loss "
                      << format_double(result.loss_history.back()) << " wrote "
                      << tr_out << "\n";
        } else if (gr->parsed()) {
            Network net = load_weights(gr_weights);
            PreparedSlide ps = prepare_slide(gr_slide, gr_k, gr_lambda, gr_seed);
            SlideGrade grade =
                grade_slide(ps, net, gr_patches, Rng(gr_seed).fork(1).next_u64());
            const fs::path out =
                gr_out.empty() ? ps.slide.root / "grade.txt" : fs::path(gr_out);
            std::ofstream rep(out);
            rep << "slide " << grade.slide_id << " votes3 " << grade.votes_grade3
                << " votes4 " << grade.votes_grade4 << " verdict " << grade.verdict
                << "\n";
            write_provenance(prov, provenance_path(out));
            if (!gr_overlay.empty()) {
                write_patch_overlay(ps, grade, net.config.input_size, gr_overlay);
            }
            std::cout << "grade " << grade.slide_id << " verdict " << grade.verdict
                      << " votes " << grade.votes_grade3 << ":" << grade.votes_grade4
                      << "\n";
        } else if (ev->parsed()) {
            Network net = load_weights(ev_weights);
            auto entries = load_corpus_manifest(ev_corpus);
            EvalReport report = evaluate(entries, ev_corpus, net, ev_patches,
                                         ev_seed, ev_k, ev_lambda, ev_jobs);
            write_eval_report(report, ev_out);
            write_provenance(prov, provenance_path(ev_out));
            std::cout << "eval slides " << report.slides.size() << " accuracy "
                      << format_double(report.accuracy) << "\n";
        } else if (nu->parsed()) {
            PreparedSlide ps = prepare_slide(nu_slide, nu_k, nu_lambda, nu_seed);
            auto nuclei = extract_nuclei(ps.hema, ps.slide.mpp);
            Plane intensity(ps.hema.width, ps.hema.height);
            for (std::size_t i = 0; i < intensity.values.size(); ++i) {
                intensity.values[i] =
                    static_cast<std::uint8_t>(255 - ps.hema.values[i]);
            }
            NucleoliParams params;
            params.separation_threshold = nu_threshold;
            params.min_dark_weight = nu_min_weight;
            auto flags = detect_prominent_nucleoli(nuclei, intensity, params);
            const fs::path out =
                nu_out.empty() ? ps.slide.root / "nucleoli.txt" : fs::path(nu_out);
            std::ofstream rep(out);
            std::size_t prominent = 0;
            for (std::size_t i = 0; i < flags.size(); ++i) {
                const auto& f = flags[i];
                prominent += f.prominent;
                rep << "nucleus " << f.nucleus_id << " cx "
                    << format_double(nuclei[i].cx) << " cy "
                    << format_double(nuclei[i].cy) << " prominent " << f.prominent
                    << " separation " << format_double(f.separation) << " dark_weight "
                    << format_double(f.dark_weight) << " status "
                    << (f.insufficient ? "insufficient"
                                       : (f.degenerate ? "degenerate" : "ok"))
                    << "\n";
            }
            rep << "summary nuclei " << flags.size() << " prominent " << prominent
                << "\n";
            write_provenance(prov, provenance_path(out));
            if (!nu_overlay.empty()) {
                OverlayRegion region{{}, 220, 40, 40};
                for (std::size_t i = 0; i < flags.size(); ++i) {
                    if (!flags[i].prominent) continue;
                    region.pixels.insert(region.pixels.end(),
                                         nuclei[i].pixels.begin(),
                                         nuclei[i].pixels.end());
                }
                write_overlay(ps.slide, 0, {region}, nu_overlay);
            }
            std::cout << "nucleoli " << ps.slide.id() << " nuclei " << flags.size()
                      << " prominent " << prominent << "\n";
        } else if (cr->parsed()) {
            PreparedSlide ps = prepare_slide(cr_slide, cr_k, cr_lambda, cr_seed);
            auto nuclei = extract_nuclei(ps.hema, ps.slide.mpp);
            auto graph = build_nuclei_graph(nuclei, ps.slide.mpp);
            CribriformParams params;
            params.min_lumens = cr_min_lumens;
            params.roundness_threshold = cr_roundness;
            auto regions = detect_cribriform(ps.slide, nuclei, graph, params);
            const fs::path out =
                cr_out.empty() ? ps.slide.root / "cribriform.txt" : fs::path(cr_out);
            std::ofstream rep(out);
            for (std::size_t i = 0; i < regions.size(); ++i) {
                rep << "region " << i << " vertices " << regions[i].vertices.size()
                    << " lumens " << regions[i].lumens.size() << "\n";
                for (const auto& lumen : regions[i].lumens) {
                    rep << "  lumen cx " << format_double(lumen.cx) << " cy "
                        << format_double(lumen.cy) << " area "
                        << format_double(lumen.area) << " roundness "
                        << format_double(lumen.roundness) << "\n";
                }
            }
            rep << "summary regions " << regions.size() << "\n";
            write_provenance(prov, provenance_path(out));
            if (!cr_overlay.empty()) {
                std::vector<OverlayRegion> overlays;
                for (const auto& region : regions) {
                    overlays.push_back({region.region_pixels, 60, 80, 255});
                    for (const auto& lumen : region.lumens) {
                        overlays.push_back({lumen.pixels, 40, 200, 60});
                    }
                }
                write_overlay(ps.slide, 0, overlays, cr_overlay);
            }
            std::cout << "cribriform " << ps.slide.id() << " regions "
                      << regions.size() << "\n";
        } else if (gc->parsed()) {
            return run_gradcheck(gc_out, prov);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
