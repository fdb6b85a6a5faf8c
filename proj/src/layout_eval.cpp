#include "docparse_eval/layout_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "docparse_eval/errors.hpp"

namespace docparse_eval {

using nlohmann::json;

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

Detection parse_detection(const json& j, std::size_t index) {
  auto fail = [&](const std::string& msg) {
    throw InputError("detection #" + std::to_string(index) + ": " + msg);
  };
  if (!j.is_object()) fail("not an object");
  Detection d;
  if (!j.contains("page_id") || !j["page_id"].is_string()) fail("missing page_id");
  d.page_id = j["page_id"].get<std::string>();
  if (!j.contains("category") || !j["category"].is_string()) fail("missing category");
  const auto cat = from_string<Category>(j["category"].get<std::string>());
  if (!cat) fail("unknown category '" + j["category"].get<std::string>() + "'");
  if (!is_block_level(*cat)) fail("category must be block level");
  d.category = *cat;
  if (!j.contains("bbox") || !j["bbox"].is_array()) fail("missing bbox");
  const auto& bb = j["bbox"];
  std::vector<double> v;
  for (const auto& x : bb) {
    if (!x.is_number()) fail("bbox values must be numbers");
    v.push_back(x.get<double>());
  }
  if (v.size() == 4) {
    d.bbox = {v[0], v[1], v[2], v[3]};
  } else if (v.size() == 8) {
    d.bbox = {std::min({v[0], v[2], v[4], v[6]}), std::min({v[1], v[3], v[5], v[7]}),
              std::max({v[0], v[2], v[4], v[6]}), std::max({v[1], v[3], v[5], v[7]})};
  } else {
    fail("bbox must have 4 or 8 numbers");
  }
  if (!d.bbox.well_formed()) fail("bbox is not well formed");
  if (j.contains("confidence")) {
    if (!j["confidence"].is_number()) fail("confidence must be a number");
    d.confidence = j["confidence"].get<double>();
  }
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) fail("confidence outside [0, 1]");
  return d;
}

using Key = std::tuple<std::string, double, double, double, double>;

Key canonical_key(const Detection& d) { return {d.page_id, d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1}; }

double ap_for(const std::vector<const GroundTruthPage*>& pages, const std::vector<Detection>& detections,
              Category category, double threshold) {
  // GT boxes per page.
  std::unordered_map<std::string, std::vector<BBox>> gt;
  std::size_t npos = 0;
  for (const GroundTruthPage* p : pages) {
    for (const auto& b : p->blocks) {
      if (b.category != category) continue;
      gt[p->page_id].push_back(b.bbox);
      ++npos;
    }
  }
  if (npos == 0) return 0.0;

  std::vector<const Detection*> dets;
  for (const auto& d : detections) {
    if (d.category == category) dets.push_back(&d);
  }
  std::sort(dets.begin(), dets.end(), [](const Detection* a, const Detection* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    return canonical_key(*a) < canonical_key(*b);
  });

  std::unordered_map<std::string, std::vector<bool>> used;
  for (const auto& [page, boxes] : gt) used[page].assign(boxes.size(), false);

  std::vector<std::pair<double, double>> points;  // (recall, precision) at tier ends
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const Detection& d = *dets[k];
    bool hit = false;
    if (auto it = gt.find(d.page_id); it != gt.end()) {
      auto& flags = used[d.page_id];
      double best = -1.0;
      std::size_t best_idx = 0;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (flags[g]) continue;
        const double o = iou(d.bbox, it->second[g]);
        if (o >= threshold && o > best) {
          best = o;
          best_idx = g;
        }
      }
      if (best >= 0.0) {
        flags[best_idx] = true;
        hit = true;
      }
    }
    hit ? ++tp : ++fp;
    const bool tier_end = k + 1 == dets.size() || dets[k + 1]->confidence != d.confidence;
    if (tier_end) {
      points.emplace_back(static_cast<double>(tp) / static_cast<double>(npos),
                          static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
  }
  // Precision envelope, then 101 recall samples.
  for (std::size_t k = points.size(); k-- > 1;) {
    points[k - 1].second = std::max(points[k - 1].second, points[k].second);
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    auto it = std::lower_bound(points.begin(), points.end(), level - 1e-12,
                               [](const std::pair<double, double>& p, double v) { return p.first < v; });
    if (it != points.end()) sum += it->second;
  }
  return sum / 101.0;
}

std::set<Category> evaluated_categories(const std::vector<const GroundTruthPage*>& pages, const LayoutConfig& config) {
  std::set<Category> cats;
  for (const GroundTruthPage* p : pages) {
    for (const auto& b : p->blocks) {
      if (!is_block_level(b.category) || is_masked(b.category) || config.excluded.count(b.category)) continue;
      cats.insert(b.category);
    }
  }
  return cats;
}

std::map<Category, double> category_aps(const std::vector<const GroundTruthPage*>& pages,
                                        const std::vector<Detection>& detections, const LayoutConfig& config) {
  std::map<Category, double> out;
  for (Category c : evaluated_categories(pages, config)) {
    double sum = 0.0;
    for (double t : config.iou_thresholds) sum += ap_for(pages, detections, c, t);
    out[c] = config.iou_thresholds.empty() ? 0.0 : sum / static_cast<double>(config.iou_thresholds.size());
  }
  return out;
}

double mean_of(const std::map<Category, double>& aps) {
  if (aps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [c, v] : aps) s += v;
  return s / static_cast<double>(aps.size());
}

}  // namespace

std::vector<Detection> parse_detections(std::string_view text) {
  std::vector<Detection> out;
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return out;
  if (text[first] == '[') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("detections: invalid JSON: ") + e.what());
    }
    std::size_t i = 0;
    for (const auto& j : doc) out.push_back(parse_detection(j, i++));
    return out;
  }
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("detections line " + std::to_string(i + 1) + ": invalid JSON: " + e.what());
    }
    out.push_back(parse_detection(j, i++));
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read detections file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_detections(buf.str());
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
  return t;
}

double average_precision(const Dataset& dataset, const std::vector<Detection>& detections, Category category,
                         double threshold) {
  std::vector<const GroundTruthPage*> pages;
  for (const auto& p : dataset.pages) pages.push_back(&p);
  return ap_for(pages, detections, category, threshold);
}

APResult evaluate_map(const Dataset& dataset, const std::vector<Detection>& detections, const LayoutConfig& config) {
  for (const auto& d : detections) {
    if (!dataset.find_page(d.page_id)) throw InputError("detection for unknown page_id '" + d.page_id + "'");
  }
  for (double t : config.iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw InputError("IoU thresholds must lie in (0, 1]");
  }
  APResult r;
  r.iou_thresholds = config.iou_thresholds;
  std::vector<const GroundTruthPage*> all;
  for (const auto& p : dataset.pages) all.push_back(&p);
  r.per_category = category_aps(all, detections, config);
  r.map = mean_of(r.per_category);

  std::map<PdfType, std::vector<const GroundTruthPage*>> by_type;
  for (const auto& p : dataset.pages) by_type[p.attributes.pdf_type].push_back(&p);
  for (const auto& [type, pages] : by_type) {
    std::set<std::string> ids;
    for (const auto* p : pages) ids.insert(p->page_id);
    std::vector<Detection> subset;
    for (const auto& d : detections) {
      if (ids.count(d.page_id)) subset.push_back(d);
    }
    r.per_pdf_type[std::string(to_string(type))] = mean_of(category_aps(pages, subset, config));
  }
  return r;
}

json to_json(const APResult& result) {
  json j;
  j["map"] = result.map;
  json cats = json::object();
  for (const auto& [c, v] : result.per_category) cats[std::string(to_string(c))] = v;
  j["per_category"] = cats;
  json types = json::object();
  for (const auto& [t, v] : result.per_pdf_type) types[t] = v;
  j["per_pdf_type"] = types;
  j["iou_thresholds"] = result.iou_thresholds;
  return j;
}

}  // namespace docparse_eval
