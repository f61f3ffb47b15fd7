#ifndef PROGRADE_SYNTH_HPP
#define PROGRADE_SYNTH_HPP

#include "prograde/slide.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace prograde {

enum class SynthClass { Grade3, Grade4, Benign };

// Parametric H&E-like slide. Pixel colors come from the forward stain model
// (O = M * S, then the inverse optical-density transform), so the stain
// decomposition has an exact oracle. grade3_fraction < 1 produces a mixture
// slide: that fraction of the glandular area is grade-3 ring glands, the
// rest a fused grade-4 sheet.
struct SynthSpec {
    SynthClass cls = SynthClass::Grade3;
    int width = 1024;
    int height = 1024;
    double mpp = 0.5;
    double gland_density = 1.0;    // scales the gland grid pitch
    double grade3_fraction = 1.0;  // glandular-area fraction of grade-3 pattern
    bool cribriform = false;
    bool pen_marker = false;
    std::string label = "3+3";
    std::uint64_t seed = 0;
};

struct Circle {
    double x = 0, y = 0, r = 0;  // level-0 pixels
};

struct GroundTruth {
    TissueMask tumor_mask;  // at the lowest pyramid level
    std::vector<Circle> lumens;
    std::vector<std::pair<double, double>> nuclei;  // level-0 centroids
    std::vector<Circle> cribriform_regions;         // gland disks
    std::string label;
    double grade3_area = 0;  // level-0 tumor pixels per pattern
    double grade4_area = 0;
};

// Renders a slide package (tiles + manifest) plus its ground truth into
// out_dir. The ground truth is also persisted (ground_truth.json,
// gt_mask.png) so tests and the CLI can reload it.
std::pair<SlidePackage, GroundTruth> synth_slide(const SynthSpec& spec,
                                                 const std::filesystem::path& out_dir);

GroundTruth load_ground_truth(const std::filesystem::path& slide_dir);

struct CorpusEntry {
    std::string slide_path;  // relative to the corpus directory
    std::string label;
    std::string split;  // "train" or "eval"
};

// n grade-3 slides ("3+3") and n grade-4 slides ("4+4") for training, plus
// n "3+4" and n "4+3" mixture slides for evaluation. Writes dataset.json.
// Slides are seeded independently, so jobs > 1 renders them in parallel
// without changing the output.
std::vector<CorpusEntry> synth_corpus(int n_per_class,
                                      const std::filesystem::path& out_dir,
                                      std::uint64_t seed, int slide_size = 1024,
                                      int jobs = 1);

std::vector<CorpusEntry> load_corpus_manifest(const std::filesystem::path& dir);
void write_corpus_manifest(const std::filesystem::path& dir,
                           const std::vector<CorpusEntry>& entries);

} // namespace prograde

#endif
