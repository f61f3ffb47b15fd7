#ifndef PROGRADE_TUMOR_MASK_HPP
#define PROGRADE_TUMOR_MASK_HPP

#include "prograde/slide.hpp"

#include <cstdint>

namespace prograde {

// K-means tumor segmentation on the lowest pyramid level: pixels are
// clustered on their L*a*b* (a, b) chroma pair, and the cluster with the
// SECOND highest mean RGB blue value becomes the tumor (white background
// has the highest). Labels: 0 = brightest-blue cluster, 1 = tumor, the
// rest 2.. in descending blue order. k = 3 normally, 4 for slides carrying
// a pen marker. Ties in the blue ranking go to the larger cluster.
TissueMask extract_tumor_mask(const SlidePackage& slide, int k, std::uint64_t seed);

} // namespace prograde

#endif
