#pragma once

// Layout-detection scoring: IoU matching and COCO-style mAP per category,
// overall and per page type.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "docparse_eval/annotation.hpp"

namespace docparse_eval {

struct Detection {
  std::string page_id;
  Category category = Category::text_block;
  BBox bbox;
  double confidence = 1.0;
};

double iou(const BBox& a, const BBox& b);

// Accepts a JSON list or JSON Lines of {"page_id","category","bbox","confidence"}.
// Throws InputError on malformed records.
std::vector<Detection> parse_detections(std::string_view text);
std::vector<Detection> load_detections(const std::filesystem::path& path);

// 0.50, 0.55, ..., 0.95
std::vector<double> default_iou_thresholds();

struct LayoutConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  std::set<Category> excluded;
};

struct APResult {
  std::map<Category, double> per_category;  // AP averaged over thresholds
  std::map<std::string, double> per_pdf_type;  // mAP within each page type
  double map = 0.0;
  std::vector<double> iou_thresholds;
};

// Average precision of one category at one IoU threshold, 101-point
// interpolation. Detections with equal confidence are ordered by (page_id,
// box) and precision/recall is only sampled after a whole confidence tier,
// so the result does not depend on input order.
double average_precision(const Dataset& dataset, const std::vector<Detection>& detections, Category category,
                         double threshold);

// Throws InputError for a detection whose page is not in the dataset.
APResult evaluate_map(const Dataset& dataset, const std::vector<Detection>& detections, const LayoutConfig& config = {});

nlohmann::json to_json(const APResult& result);

}  // namespace docparse_eval
