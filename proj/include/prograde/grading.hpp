#ifndef PROGRADE_GRADING_HPP
#define PROGRADE_GRADING_HPP

#include "prograde/cnn.hpp"
#include "prograde/slide.hpp"
#include "prograde/synth.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace prograde {

enum class Split { Train, Eval, Excluded };

struct LabelInfo {
    Split split = Split::Excluded;
    int train_class = -1;  // 0 = grade 3, 1 = grade 4 and above, -1 otherwise
};

// Census split rule: 3+3 -> train class 0; {4+4, 4+5, 5+4, 5+5} -> train
// class 1; {3+4, 4+3} -> eval; {2+4, 3+5, 5+3} -> excluded. Any other grade
// string is rejected.
LabelInfo classify_label(const std::string& label);

struct SplitCounts {
    int train = 0;
    int train_class3 = 0;
    int train_class4 = 0;
    int eval = 0;
    int excluded = 0;
};

SplitCounts split_census(const std::vector<CorpusEntry>& entries);

// Masked slide with its per-slide optimized decomposition and the resulting
// level-0 hematoxylin plane, the shared front end of dataset construction,
// grading and the pattern detectors.
struct PreparedSlide {
    SlidePackage slide;
    TissueMask mask;
    Eigen::Matrix3d D;
    Plane hema;  // level 0
};

// Tumor mask -> stain optimization over the tumor-masked level-0 pixels ->
// hematoxylin plane. Throws "empty tumor mask" when the mask has no tumor
// label.
PreparedSlide prepare_slide(const std::filesystem::path& slide_dir, int k,
                            double lambda, std::uint64_t seed);

struct PatchDataset {
    Eigen::MatrixXd patches;  // one flattened patch per column, values in [0,1]
    std::vector<int> labels;  // 0 = grade 3, 1 = grade 4 and above
    int patch_size = 0;
    SplitCounts counts;
    std::vector<std::string> warnings;  // skipped slides
};

// Weak-label patch set: patch_count hematoxylin patches per train slide,
// labeled by the slide grade. Train slides with an empty tumor mask are
// skipped with a warning. patch_count == 0 performs the split bookkeeping
// only (no slide I/O). Throws "empty train set" when no label maps to the
// train split.
PatchDataset build_patch_dataset(const std::vector<CorpusEntry>& entries,
                                 const std::filesystem::path& corpus_dir,
                                 int patch_count, int patch_size,
                                 std::uint64_t seed, int k = 3,
                                 double lambda = 1.0);

void save_patch_dataset(const PatchDataset& dataset,
                        const std::filesystem::path& path);
PatchDataset load_patch_dataset(const std::filesystem::path& path);

struct PatchVote {
    int x = 0, y = 0;   // level-0 patch origin
    int predicted = 0;  // 0 = grade 3, 1 = grade 4 and above
};

struct SlideGrade {
    std::string slide_id;
    int votes_grade3 = 0;
    int votes_grade4 = 0;
    std::string verdict;  // "3+4*" or "4*+3"
    std::vector<PatchVote> patch_votes;
};

// Classifier over a flattened patch plus its origin; lets tests inject a
// ground-truth oracle in place of the network.
struct PatchSample {
    int x = 0, y = 0;
    Eigen::VectorXd features;
};
using PatchClassifier = std::function<int(const PatchSample&)>;

// Majority vote over n_patches tumor-mask patches. Verdict is "3+4*" iff
// votes_grade3 > votes_grade4, else "4*+3" (ties go to the higher grade).
SlideGrade grade_slide(const PreparedSlide& prepared, const Network& net,
                       int n_patches, std::uint64_t seed);
SlideGrade grade_slide_with(const PreparedSlide& prepared,
                            const PatchClassifier& classify, int n_patches,
                            int patch_size, std::uint64_t seed);

struct SlideEvalRecord {
    std::string slide_id;
    std::string label;  // "3+4" or "4+3"
    SlideGrade grade;
    bool correct = false;
};

struct EvalReport {
    double accuracy = 0.0;
    // [true label: 0 = 3+4, 1 = 4+3][verdict: 0 = "3+4*", 1 = "4*+3"]
    int confusion[2][2] = {{0, 0}, {0, 0}};
    std::vector<SlideEvalRecord> slides;
};

// Grades every eval-split entry; slides run in parallel across jobs threads
// with results collected in manifest order.
EvalReport evaluate(const std::vector<CorpusEntry>& entries,
                    const std::filesystem::path& corpus_dir, const Network& net,
                    int n_patches, std::uint64_t seed, int k = 3,
                    double lambda = 1.0, int jobs = 1);

void write_eval_report(const EvalReport& report,
                       const std::filesystem::path& path);
EvalReport read_eval_report(const std::filesystem::path& path);

} // namespace prograde

#endif
