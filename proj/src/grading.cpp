#include "prograde/grading.hpp"

#include "prograde/colorspace.hpp"
#include "prograde/rng.hpp"
#include "prograde/stain.hpp"
#include "prograde/tumor_mask.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace prograde {

using nlohmann::json;

namespace {

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

Eigen::VectorXd patch_features(const Plane& hema, int x, int y, int size) {
    Eigen::VectorXd f(static_cast<Eigen::Index>(size) * size);
    Eigen::Index k = 0;
    for (int py = 0; py < size; ++py) {
        for (int px = 0; px < size; ++px) {
            f[k++] = hema.at(x + px, y + py) / 255.0;
        }
    }
    return f;
}

std::string vote_verdict(int votes3, int votes4) {
    return votes3 > votes4 ? "3+4*" : "4*+3";
}

} // namespace

LabelInfo classify_label(const std::string& label) {
    if (label == "3+3") return {Split::Train, 0};
    if (label == "4+4" || label == "4+5" || label == "5+4" || label == "5+5") {
        return {Split::Train, 1};
    }
    if (label == "3+4" || label == "4+3") return {Split::Eval, -1};
    if (label == "2+4" || label == "3+5" || label == "5+3") {
        return {Split::Excluded, -1};
    }
    throw std::runtime_error("grading: unknown grade \"" + label + "\"");
}

SplitCounts split_census(const std::vector<CorpusEntry>& entries) {
    SplitCounts c;
    for (const auto& e : entries) {
        LabelInfo info = classify_label(e.label);
        switch (info.split) {
            case Split::Train:
                ++c.train;
                ++(info.train_class == 0 ? c.train_class3 : c.train_class4);
                break;
            case Split::Eval: ++c.eval; break;
            case Split::Excluded: ++c.excluded; break;
        }
    }
    return c;
}

PreparedSlide prepare_slide(const std::filesystem::path& slide_dir, int k,
                            double lambda, std::uint64_t seed) {
    PreparedSlide ps;
    ps.slide = open_slide(slide_dir);
    ps.mask = extract_tumor_mask(ps.slide, k, seed);
    const int ds = ps.slide.level_info(ps.mask.level).downsample;

    RgbImage rgb = read_region(ps.slide, 0, 0, 0, ps.slide.width, ps.slide.height);
    OdImage od = rgb_to_od(rgb);

    Eigen::Matrix3d g_sum = Eigen::Matrix3d::Zero();
    std::size_t count = 0;
    for (int y = 0; y < od.height; ++y) {
        const int my = std::min(y / ds, ps.mask.height - 1);
        for (int x = 0; x < od.width; ++x) {
            const int mx = std::min(x / ds, ps.mask.width - 1);
            if (ps.mask.at(mx, my) != 1) continue;
            Eigen::Vector3d o(od.at(x, y, 0), od.at(x, y, 1), od.at(x, y, 2));
            g_sum.noalias() += o * o.transpose();
            ++count;
        }
    }
    if (count == 0) {
        throw std::runtime_error("grading: empty tumor mask in " + ps.slide.id());
    }

    StainModel model = default_stain_model();
    model.lambda = lambda;
    StainModel optimized = optimize_stain_matrix_from_moment(g_sum / static_cast<double>(count), model);
    ps.D = optimized.D;
    ps.hema = hematoxylin_plane_to_image(apply_decomposition(od, ps.D));
    return ps;
}

PatchDataset build_patch_dataset(const std::vector<CorpusEntry>& entries,
                                 const std::filesystem::path& corpus_dir,
                                 int patch_count, int patch_size,
                                 std::uint64_t seed, int k, double lambda) {
    if (entries.empty()) throw std::runtime_error("grading: empty manifest");
    PatchDataset ds;
    ds.patch_size = patch_size;
    ds.counts = split_census(entries);
    if (ds.counts.train == 0) throw std::runtime_error("grading: empty train set");
    if (patch_count == 0) return ds;

    Rng master(seed);
    std::vector<Eigen::VectorXd> columns;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        LabelInfo info = classify_label(entries[i].label);
        if (info.split != Split::Train) continue;
        Rng sr = master.fork(static_cast<std::uint64_t>(i));
        const std::uint64_t mask_seed = sr.next_u64();
        const std::uint64_t patch_seed = sr.next_u64();
        PreparedSlide ps;
        try {
            ps = prepare_slide(corpus_dir / entries[i].slide_path, k, lambda, mask_seed);
        } catch (const std::runtime_error& e) {
            if (std::string(e.what()).find("empty tumor mask") != std::string::npos) {
                ds.warnings.push_back("skipped " + entries[i].slide_path +
                                      ": empty tumor mask");
                continue;
            }
            throw;
        }
        auto origins = sample_patch_origins(ps.slide, ps.mask, patch_count,
                                            patch_size, 0, patch_seed);
        for (const auto& [x, y] : origins) {
            columns.push_back(patch_features(ps.hema, x, y, patch_size));
            ds.labels.push_back(info.train_class);
        }
    }
    if (columns.empty()) throw std::runtime_error("grading: no train patches produced");
    ds.patches.resize(columns.front().size(),
                      static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        ds.patches.col(static_cast<Eigen::Index>(i)) = columns[i];
    }
    return ds;
}

void save_patch_dataset(const PatchDataset& dataset,
                        const std::filesystem::path& path) {
    json header;
    header["format_version"] = 1;
    header["patch_size"] = dataset.patch_size;
    header["features"] = dataset.patches.rows();
    header["count"] = dataset.patches.cols();
    header["labels"] = dataset.labels;
    header["warnings"] = dataset.warnings;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dataset: cannot open for write: " + path.string());
    out << header.dump() << "\n";
    std::vector<double> values(dataset.patches.data(),
                               dataset.patches.data() + dataset.patches.size());
    if (!host_little_endian()) swap_doubles(values);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * 8));
    if (!out) throw std::runtime_error("dataset: write failed: " + path.string());
}

PatchDataset load_patch_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("dataset: cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset: truncated file");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("dataset: bad header: ") + e.what());
    }
    PatchDataset ds;
    ds.patch_size = header.at("patch_size").get<int>();
    ds.labels = header.at("labels").get<std::vector<int>>();
    ds.warnings = header.at("warnings").get<std::vector<std::string>>();
    const Eigen::Index rows = header.at("features").get<Eigen::Index>();
    const Eigen::Index cols = header.at("count").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(ds.labels.size()) != cols) {
        throw std::runtime_error("dataset: label count mismatch");
    }
    ds.patches.resize(rows, cols);
    std::vector<double> values(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * 8));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * 8)) {
        throw std::runtime_error("dataset: truncated file");
    }
    if (!host_little_endian()) swap_doubles(values);
    std::copy(values.begin(), values.end(), ds.patches.data());
    return ds;
}

SlideGrade grade_slide_with(const PreparedSlide& prepared,
                            const PatchClassifier& classify, int n_patches,
                            int patch_size, std::uint64_t seed) {
    if (n_patches < 1) throw std::invalid_argument("grading: n_patches must be >= 1");
    SlideGrade grade;
    grade.slide_id = prepared.slide.id();
    auto origins = sample_patch_origins(prepared.slide, prepared.mask, n_patches,
                                        patch_size, 0, seed);
    for (const auto& [x, y] : origins) {
        PatchSample sample{x, y, patch_features(prepared.hema, x, y, patch_size)};
        const int predicted = classify(sample);
        grade.patch_votes.push_back({x, y, predicted});
        ++(predicted == 0 ? grade.votes_grade3 : grade.votes_grade4);
    }
    grade.verdict = vote_verdict(grade.votes_grade3, grade.votes_grade4);
    return grade;
}

SlideGrade grade_slide(const PreparedSlide& prepared, const Network& net,
                       int n_patches, std::uint64_t seed) {
    if (n_patches < 1) throw std::invalid_argument("grading: n_patches must be >= 1");
    const int size = net.config.input_size;
    SlideGrade grade;
    grade.slide_id = prepared.slide.id();
    auto origins = sample_patch_origins(prepared.slide, prepared.mask, n_patches,
                                        size, 0, seed);
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(size) * size,
                          static_cast<Eigen::Index>(origins.size()));
    for (std::size_t i = 0; i < origins.size(); ++i) {
        batch.col(static_cast<Eigen::Index>(i)) =
            patch_features(prepared.hema, origins[i].first, origins[i].second, size);
    }
    Eigen::MatrixXd probs = forward(net, batch, Mode::Infer);
    for (std::size_t i = 0; i < origins.size(); ++i) {
        Eigen::Index predicted = 0;
        probs.col(static_cast<Eigen::Index>(i)).maxCoeff(&predicted);
        const int cls = predicted == 0 ? 0 : 1;
        grade.patch_votes.push_back({origins[i].first, origins[i].second, cls});
        ++(cls == 0 ? grade.votes_grade3 : grade.votes_grade4);
    }
    grade.verdict = vote_verdict(grade.votes_grade3, grade.votes_grade4);
    return grade;
}

EvalReport evaluate(const std::vector<CorpusEntry>& entries,
                    const std::filesystem::path& corpus_dir, const Network& net,
                    int n_patches, std::uint64_t seed, int k, double lambda,
                    int jobs) {
    struct EvalItem {
        std::size_t manifest_index;
        const CorpusEntry* entry;
    };
    std::vector<EvalItem> items;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (classify_label(entries[i].label).split == Split::Eval) {
            items.push_back({i, &entries[i]});
        }
    }
    if (items.empty()) throw std::runtime_error("grading: empty eval split");

    EvalReport report;
    report.slides.resize(items.size());
    Rng master(seed);
    std::atomic<std::size_t> next{0};
    std::string failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                Rng sr = master.fork(static_cast<std::uint64_t>(items[i].manifest_index));
                const std::uint64_t mask_seed = sr.next_u64();
                const std::uint64_t patch_seed = sr.next_u64();
                PreparedSlide ps = prepare_slide(corpus_dir / items[i].entry->slide_path,
                                                 k, lambda, mask_seed);
                SlideEvalRecord rec;
                rec.slide_id = ps.slide.id();
                rec.label = items[i].entry->label;
                rec.grade = grade_slide(ps, net, n_patches, patch_seed);
                const int truth = rec.label == "3+4" ? 0 : 1;
                const int verdict = rec.grade.verdict == "3+4*" ? 0 : 1;
                rec.correct = truth == verdict;
                report.slides[i] = std::move(rec);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure.empty()) failure = e.what();
                return;
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!failure.empty()) throw std::runtime_error(failure);

    int correct = 0;
    for (const auto& rec : report.slides) {
        const int truth = rec.label == "3+4" ? 0 : 1;
        const int verdict = rec.grade.verdict == "3+4*" ? 0 : 1;
        ++report.confusion[truth][verdict];
        if (rec.correct) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.slides.size());
    return report;
}

void write_eval_report(const EvalReport& report,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("grading: cannot write report: " + path.string());
    for (const auto& rec : report.slides) {
        out << "slide " << rec.slide_id << " label " << rec.label << " votes3 "
            << rec.grade.votes_grade3 << " votes4 " << rec.grade.votes_grade4
            << " verdict " << rec.grade.verdict << " correct " << (rec.correct ? 1 : 0)
            << "\n";
    }
    char acc[64];
    std::snprintf(acc, sizeof acc, "%.17g", report.accuracy);
    out << "summary slides " << report.slides.size() << " accuracy " << acc << "\n";
    out << "confusion " << report.confusion[0][0] << " " << report.confusion[0][1]
        << " " << report.confusion[1][0] << " " << report.confusion[1][1] << "\n";
    if (!out) throw std::runtime_error("grading: report write failed: " + path.string());
}

EvalReport read_eval_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("grading: cannot read report: " + path.string());
    EvalReport report;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "slide") {
            SlideEvalRecord rec;
            std::string key;
            int correct = 0;
            ls >> rec.slide_id >> key >> rec.label >> key >> rec.grade.votes_grade3 >>
                key >> rec.grade.votes_grade4 >> key >> rec.grade.verdict >> key >> correct;
            rec.correct = correct != 0;
            report.slides.push_back(std::move(rec));
        } else if (tag == "summary") {
            std::string key;
            std::size_t n = 0;
            ls >> key >> n >> key >> report.accuracy;
        } else if (tag == "confusion") {
            ls >> report.confusion[0][0] >> report.confusion[0][1] >>
                report.confusion[1][0] >> report.confusion[1][1];
        }
    }
    return report;
}

} // namespace prograde
