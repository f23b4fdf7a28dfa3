#pragma once

#include <filesystem>
#include <vector>

#include "gdsal/eval.hpp"

namespace gdsal {

/// cutoff,precision,recall,f_beta,valid - one row per cutoff.
void write_curve_csv(const std::filesystem::path& path, const PRCurve& curve,
                     double beta2);
/// cutoff,precision,recall,f_beta - the report's mean curve.
void write_mean_curve_csv(const std::filesystem::path& path, const EvalReport& report);
/// id,max_f_beta[,segmentation_f_beta]
void write_per_image_csv(const std::filesystem::path& path, const EvalReport& report);
/// method,images,mean_max_f_beta,segmented_images,mean_segmentation_f_beta
void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<EvalReport>& reports);

/// Mean PR curves, one polyline per method.
void write_pr_svg(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
/// Mean max-F (and segmentation F where present) per method as bars.
void write_fbeta_svg(const std::filesystem::path& path,
                     const std::vector<EvalReport>& reports);

}  // namespace gdsal
