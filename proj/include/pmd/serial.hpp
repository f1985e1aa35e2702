#pragma once

// Single-threaded reference versions of the kernels in pmd/kernels.hpp. They
// scatter patch contributions into accumulators instead of gathering per
// pixel, so they share no loop structure with the parallel versions.

#include "pmd/kernels.hpp"

namespace pmd::serial {

DepthMap overlap_average(std::span<const double> patches, const PatchGrid& grid);
DepthMap average_selected(const SampleSet& samples, const Selection& sel);
DepthMap mean_depth(const SampleSet& samples);
DepthMap variance_map(const SampleSet& samples);
Selection select_samples(const DepthMap& z, const SampleSet& samples, const PatchCostTable* table);

}  // namespace pmd::serial
