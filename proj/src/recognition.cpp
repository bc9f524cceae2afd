#include "tislf/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tislf/errors.hpp"
#include "tislf/image_io.hpp"

namespace tislf {

void TargetImage::validate() const {
  if (chunks < 2) throw ConfigError("recognition.chunks must be >= 2");
  if (width / chunks < 8) {
    throw ConfigError("target '" + id + "' is " + std::to_string(width) + " px wide; " + std::to_string(chunks) +
                      " chunks would be narrower than 8 px");
  }
  if (features.empty()) throw InputError("target '" + id + "' has no keypoints");
}

TargetImage make_target(std::string id, std::string group_id, const GrayImage& image, const FeatureParams& features,
                        int chunks) {
  TargetImage t;
  t.id = std::move(id);
  t.group_id = std::move(group_id);
  t.width = image.width();
  t.height = image.height();
  t.chunks = chunks;
  t.features = detect_and_describe(image, features);
  t.validate();
  return t;
}

std::vector<TargetImage> load_targets(const std::vector<TargetEntry>& manifest, const FeatureParams& features,
                                      int chunks) {
  std::vector<TargetImage> out;
  out.reserve(manifest.size());
  for (const auto& e : manifest) out.push_back(make_target(e.id, e.group, read_gray(e.path), features, chunks));
  return out;
}

namespace {

int band_of(double x, int width, int chunks) {
  const int k = static_cast<int>(std::floor(x * chunks / width));
  return std::clamp(k, 0, chunks - 1);
}

}  // namespace

ChunkDistribution self_match_reference(const TargetImage& target) {
  const int P = target.chunks;
  std::vector<std::size_t> counts(static_cast<std::size_t>(P), 0);
  for (const auto& kp : target.features.keypoints) ++counts[static_cast<std::size_t>(band_of(kp.x, target.width, P))];
  const auto n = static_cast<double>(target.features.size());
  ChunkDistribution q;
  q.mass.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) q.mass[k] = static_cast<double>(counts[k]) / n;
  // Absorb rounding into the last occupied band so the left-to-right sum is exactly 1.
  std::size_t last = counts.size();
  while (last > 0 && counts[last - 1] == 0) --last;
  if (last > 0) {
    double head = 0;
    for (std::size_t k = 0; k + 1 < last; ++k) head += q.mass[k];
    q.mass[last - 1] = 1.0 - head;
  }
  q.total = std::accumulate(q.mass.begin(), q.mass.end(), 0.0);
  return q;
}

FrameTargetMatch match_frame_to_target(const FeatureSet& frame, const TargetImage& target,
                                       const MatcherParams& params) {
  FrameTargetMatch out;
  out.p.mass.assign(static_cast<std::size_t>(target.chunks), 0.0);
  if (frame.empty() || target.features.empty()) return out;
  const MatchScore score = match_probability(frame, target.features, params, Denominator::Second);
  const auto n = static_cast<double>(target.features.size());
  std::vector<std::size_t> counts(out.p.mass.size(), 0);
  for (const Match& m : score.result.inliers) {
    const Keypoint& kt = target.features.keypoints[static_cast<std::size_t>(m.train)];
    ++counts[static_cast<std::size_t>(band_of(kt.x, target.width, target.chunks))];
    const Keypoint& kf = frame.keypoints[static_cast<std::size_t>(m.query)];
    const double fx = kf.x;
    const double fy = kf.y;
    if (!out.frame_box) {
      out.frame_box = Box{fx, fy, fx, fy};
    } else {
      Box& b = *out.frame_box;
      b = Box{std::min(b.x0, fx), std::min(b.y0, fy), std::max(b.x1, fx), std::max(b.y1, fy)};
    }
  }
  for (std::size_t k = 0; k < counts.size(); ++k) out.p.mass[k] = static_cast<double>(counts[k]) / n;
  out.p.total = std::accumulate(out.p.mass.begin(), out.p.mass.end(), 0.0);
  return out;
}

ChunkDistribution frame_target_distribution(const FeatureSet& frame, const TargetImage& target,
                                            const MatcherParams& params) {
  return match_frame_to_target(frame, target, params).p;
}

double kl_divergence(const ChunkDistribution& p, const ChunkDistribution& q, double eps) {
  const std::size_t P = p.mass.size();
  if (q.mass.size() != P) throw InternalError("kl_divergence: chunk counts differ");
  double sp = 0, sq = 0;
  for (std::size_t k = 0; k < P; ++k) {
    sp += p.mass[k];
    sq += q.mass[k];
  }
  if (sp == 0) return kInfiniteDivergence;
  // Normalize, then smooth: (x/s + eps) / (1 + P*eps).
  const double z = 1.0 + static_cast<double>(P) * eps;
  double d = 0;
  for (std::size_t k = 0; k < P; ++k) {
    const double a = (p.mass[k] / sp + eps) / z;
    const double b = (q.mass[k] / sq + eps) / z;
    d += a * std::log(a / b);
  }
  return std::max(0.0, d);
}

namespace {

MatchingMatrix empty_matrix(std::span<const FeatureSet> frames, const std::vector<TargetImage>& targets, int scene_id,
                            int first_frame) {
  MatchingMatrix mat;
  mat.scene_id = scene_id;
  mat.first_frame = first_frame;
  mat.rows = static_cast<int>(frames.size());
  mat.cols = static_cast<int>(targets.size());
  mat.chunks = targets.empty() ? 0 : targets.front().chunks;
  for (const auto& t : targets) {
    if (t.chunks != mat.chunks) throw ConfigError("all targets must use the same chunk count");
  }
  const std::size_t cells = static_cast<std::size_t>(mat.rows) * static_cast<std::size_t>(mat.cols);
  mat.tensor.assign(cells * static_cast<std::size_t>(mat.chunks), 0.0);
  mat.matrix.assign(cells, 0.0);
  mat.boxes.assign(cells, std::nullopt);
  return mat;
}

void fill_cell(MatchingMatrix& mat, int i, int j, const FeatureSet& frame, const TargetImage& target,
               const MatcherParams& params) {
  const FrameTargetMatch m = match_frame_to_target(frame, target, params);
  const std::size_t cell = mat.index(i, j);
  double sum = 0;
  for (int k = 0; k < mat.chunks; ++k) {
    mat.tensor[cell * static_cast<std::size_t>(mat.chunks) + static_cast<std::size_t>(k)] =
        m.p.mass[static_cast<std::size_t>(k)];
    sum += m.p.mass[static_cast<std::size_t>(k)];
  }
  mat.matrix[cell] = sum;
  mat.boxes[cell] = m.frame_box;
}

}  // namespace

MatchingMatrix build_matching_matrix(std::span<const FeatureSet> scene_frames, const std::vector<TargetImage>& targets,
                                     const MatcherParams& params, int scene_id, int first_frame) {
  MatchingMatrix mat = empty_matrix(scene_frames, targets, scene_id, first_frame);
  const int cells = mat.rows * mat.cols;
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < cells; ++c) {
    const int i = c / mat.cols;
    const int j = c % mat.cols;
    fill_cell(mat, i, j, scene_frames[static_cast<std::size_t>(i)], targets[static_cast<std::size_t>(j)], params);
  }
  return mat;
}

MatchingMatrix build_matching_matrix_serial(std::span<const FeatureSet> scene_frames,
                                            const std::vector<TargetImage>& targets, const MatcherParams& params,
                                            int scene_id, int first_frame) {
  MatchingMatrix mat = empty_matrix(scene_frames, targets, scene_id, first_frame);
  for (int i = 0; i < mat.rows; ++i) {
    for (int j = 0; j < mat.cols; ++j) {
      fill_cell(mat, i, j, scene_frames[static_cast<std::size_t>(i)], targets[static_cast<std::size_t>(j)], params);
    }
  }
  return mat;
}

void RecognitionParams::validate() const {
  if (chunks < 2) throw ConfigError("recognition.chunks must be >= 2");
  if (!(kl_thresh > 0)) throw ConfigError("recognition.kl_thresh must be > 0");
  if (!(min_mass >= 0 && min_mass <= 1)) throw ConfigError("recognition.min_mass must lie in [0, 1]");
  if (!(kmeans_gap > 0)) throw ConfigError("recognition.kmeans_gap must be > 0");
  if (!(kl_eps > 0)) throw ConfigError("recognition KL eps must be > 0");
}

std::optional<TwoPartition> optimal_two_partition(std::span<const double> row) {
  const std::size_t n = row.size();
  if (n < 2) return std::nullopt;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return row[static_cast<std::size_t>(a)] < row[static_cast<std::size_t>(b)];
  });
  std::vector<double> v(n), prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = row[static_cast<std::size_t>(order[i])];
    prefix[i + 1] = prefix[i] + v[i];
    prefix_sq[i + 1] = prefix_sq[i] + v[i] * v[i];
  }
  auto sse = [&](std::size_t a, std::size_t b) {  // [a, b)
    const double s = prefix[b] - prefix[a];
    return (prefix_sq[b] - prefix_sq[a]) - s * s / static_cast<double>(b - a);
  };
  // Optimal 1-D clusters are contiguous in sorted order; never split equal values.
  std::size_t best_split = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t s = 1; s < n; ++s) {
    if (!(v[s - 1] < v[s])) continue;
    const double cost = sse(0, s) + sse(s, n);
    if (cost < best_cost) {
      best_cost = cost;
      best_split = s;
    }
  }
  if (best_split == 0) return std::nullopt;
  TwoPartition out;
  out.low_mean = prefix[best_split] / static_cast<double>(best_split);
  out.high_mean = (prefix[n] - prefix[best_split]) / static_cast<double>(n - best_split);
  out.low.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_split));
  out.high.assign(order.begin() + static_cast<std::ptrdiff_t>(best_split), order.end());
  std::sort(out.low.begin(), out.low.end());
  std::sort(out.high.begin(), out.high.end());
  return out;
}

std::vector<int> high_cluster(std::span<const double> row, double gap, double single_floor) {
  if (row.empty()) return {};
  if (row.size() == 1) return row[0] >= single_floor ? std::vector<int>{0} : std::vector<int>{};
  std::vector<int> keep;
  std::vector<int> rest(row.size());
  std::iota(rest.begin(), rest.end(), 0);
  // Peel distinctive clusters off the top until what is left has no gap.
  while (rest.size() >= 2) {
    std::vector<double> values;
    for (int i : rest) values.push_back(row[static_cast<std::size_t>(i)]);
    const auto part = optimal_two_partition(values);
    if (!part || part->high_mean - part->low_mean < gap) break;
    for (int i : part->high) keep.push_back(rest[static_cast<std::size_t>(i)]);
    std::vector<int> low;
    for (int i : part->low) low.push_back(rest[static_cast<std::size_t>(i)]);
    rest = std::move(low);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

std::vector<CandidatePair> select_candidates(const MatchingMatrix& mat, const std::vector<TargetImage>& targets,
                                             const std::vector<ChunkDistribution>& refs,
                                             const RecognitionParams& params, bool use_kl) {
  params.validate();
  std::vector<CandidatePair> out;
  if (mat.cols == 0) return out;
  std::vector<double> row(static_cast<std::size_t>(mat.cols));
  for (int i = 0; i < mat.rows; ++i) {
    for (int j = 0; j < mat.cols; ++j) row[static_cast<std::size_t>(j)] = mat.at(i, j);
    for (int j : high_cluster(row, params.kmeans_gap, params.min_mass + params.kmeans_gap)) {
      const double p = mat.at(i, j);
      ChunkDistribution pd;
      pd.mass.assign(mat.chunks_of(i, j).begin(), mat.chunks_of(i, j).end());
      pd.total = p;
      const double kl = kl_divergence(pd, refs[static_cast<std::size_t>(j)], params.kl_eps);
      if (use_kl && !(kl <= params.kl_thresh && p >= params.min_mass)) continue;
      out.push_back({mat.first_frame + i, j, targets[static_cast<std::size_t>(j)].id, p, kl});
    }
  }
  return out;
}

std::vector<GroupTimeline> group_timelines(const MatchingMatrix& mat, const std::vector<TargetImage>& targets,
                                           const std::vector<CandidatePair>& candidates) {
  std::vector<GroupTimeline> out;
  std::map<std::string, std::size_t> slot;
  const auto rows = static_cast<std::size_t>(mat.rows);
  for (const auto& t : targets) {
    if (slot.contains(t.group_id)) continue;
    slot[t.group_id] = out.size();
    GroupTimeline g;
    g.group = t.group_id;
    g.scene_id = mat.scene_id;
    g.first_frame = mat.first_frame;
    g.presence.assign(rows, false);
    g.probability.assign(rows, 0.0);
    g.box.assign(rows, std::nullopt);
    out.push_back(std::move(g));
  }
  for (int i = 0; i < mat.rows; ++i) {
    for (int j = 0; j < mat.cols; ++j) {
      auto& g = out[slot.at(targets[static_cast<std::size_t>(j)].group_id)];
      g.probability[static_cast<std::size_t>(i)] = std::max(g.probability[static_cast<std::size_t>(i)], mat.at(i, j));
    }
  }
  for (const auto& c : candidates) {
    auto& g = out[slot.at(targets[static_cast<std::size_t>(c.target)].group_id)];
    const auto i = static_cast<std::size_t>(c.frame_idx - mat.first_frame);
    g.presence[i] = true;
    if (const auto& b = mat.box(static_cast<int>(i), c.target)) {
      auto& gb = g.box[i];
      gb = gb ? Box{std::min(gb->x0, b->x0), std::min(gb->y0, b->y0), std::max(gb->x1, b->x1), std::max(gb->y1, b->y1)}
              : *b;
    }
  }
  return out;
}

}  // namespace tislf
