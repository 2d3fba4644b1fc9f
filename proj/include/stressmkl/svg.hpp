#pragma once

#include <span>
#include <string>
#include <vector>

#include "stressmkl/clustering.hpp"
#include "stressmkl/harness.hpp"

namespace stressmkl {

std::string xml_escape(const std::string& s);

/// Similarity heatmap with drives sorted by task then drive_id. Darker cells
/// mean higher similarity; each task's diagonal block is outlined.
std::string similarity_svg(const ClusteringResult& clustering);

/// One row per (fold, task), one column per view. Darker = larger weight.
std::string eta_heatmap_svg(const CvReport& report);

}  // namespace stressmkl
