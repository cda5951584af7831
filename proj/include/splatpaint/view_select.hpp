// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/camera.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/scene_io.hpp"

namespace splatpaint {

struct ClusterAssignment {
    std::vector<int> labels;                  // per input point, in [0, k)
    std::vector<Eigen::Vector3d> centroids;   // k entries

    int k() const { return static_cast<int>(centroids.size()); }
};

struct ReferenceSet {
    std::vector<int> reference_view_ids;  // one per cluster, ordered by cluster index
};

namespace detail {

inline int nearest_centroid(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& centroids) {
    int best = 0;
    double best_d2 = (p - centroids[0]).squaredNorm();
    for (int j = 1; j < static_cast<int>(centroids.size()); ++j) {
        const double d2 = (p - centroids[j]).squaredNorm();
        if (d2 < best_d2) {  // ties keep the lower centroid index
            best_d2 = d2;
            best = j;
        }
    }
    return best;
}

inline std::size_t count_distinct(const std::vector<Eigen::Vector3d>& points) {
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i && !seen; ++j) seen = points[i] == points[j];
        if (!seen) ++distinct;
    }
    return distinct;
}

}  // namespace detail

/// Seeded k-means++ with Lloyd refinement. Runs until assignments stop
/// changing or 100 iterations. Empty clusters are repaired by moving in the
/// point farthest from its centroid. Fully deterministic for fixed inputs.
inline ClusterAssignment kmeans(const std::vector<Eigen::Vector3d>& points, int k, std::uint64_t seed) {
    const std::size_t n = points.size();
    if (k < 1) throw ValidationError("kmeans: k must be >= 1");
    if (detail::count_distinct(points) < static_cast<std::size_t>(k))
        throw ValidationError("kmeans: need at least " + std::to_string(k) + " distinct points, have " +
                              std::to_string(detail::count_distinct(points)));

    Rng rng(seed);
    ClusterAssignment out;
    out.centroids.reserve(k);
    out.centroids.push_back(points[rng.uniform_index(n)]);
    std::vector<double> d2(n);
    while (out.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : out.centroids) best = std::min(best, (points[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double cumulative = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cumulative += d2[i];
                if (r < cumulative) {
                    pick = i;
                    break;
                }
            }
            // land on a point with nonzero distance even if rounding overshot
            if (d2[pick] == 0.0) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (d2[i] > 0.0) pick = i;
                }
            }
        } else {
            // all mass on chosen centroids cannot happen: distinct points >= k
            throw NumericError("kmeans: seeding degenerated");
        }
        out.centroids.push_back(points[pick]);
    }

    out.labels.assign(n, 0);
    for (int iteration = 0; iteration < 100; ++iteration) {
        bool changed = iteration == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int label = detail::nearest_centroid(points[i], out.centroids);
            if (label != out.labels[i]) changed = true;
            out.labels[i] = label;
        }

        std::vector<int> count(k, 0);
        for (int label : out.labels) count[label]++;
        for (int j = 0; j < k; ++j) {
            if (count[j] > 0) continue;
            // repair: move in the point farthest from its centroid
            std::size_t farthest = 0;
            double far_d2 = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[out.labels[i]] <= 1) continue;  // do not empty another cluster
                const double d = (points[i] - out.centroids[out.labels[i]]).squaredNorm();
                if (d > far_d2) {
                    far_d2 = d;
                    farthest = i;
                }
            }
            count[out.labels[farthest]]--;
            out.labels[farthest] = j;
            count[j] = 1;
            changed = true;
        }

        if (!changed) break;
        std::vector<Eigen::Vector3d> sums(k, Eigen::Vector3d::Zero());
        for (std::size_t i = 0; i < n; ++i) sums[out.labels[i]] += points[i];
        for (int j = 0; j < k; ++j) out.centroids[j] = sums[j] / count[j];
    }
    return out;
}

/// Within-cluster sum of squared distances to the centroid means of `labels`.
inline double wcss(const std::vector<Eigen::Vector3d>& points, const std::vector<int>& labels, int k) {
    std::vector<Eigen::Vector3d> sums(k, Eigen::Vector3d::Zero());
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sums[labels[i]] += points[i];
        count[labels[i]]++;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Eigen::Vector3d mean = sums[labels[i]] / count[labels[i]];
        total += (points[i] - mean).squaredNorm();
    }
    return total;
}

/// Per cluster, the view whose camera center is closest to the centroid; ties
/// go to the lower view id.
inline ReferenceSet select_references(const ClusterAssignment& assignment,
                                      const std::vector<Eigen::Vector3d>& centers,
                                      const std::vector<int>& view_ids) {
    if (assignment.labels.size() != centers.size() || centers.size() != view_ids.size())
        throw ValidationError("select_references: input sizes disagree");
    ReferenceSet refs;
    refs.reference_view_ids.assign(assignment.k(), -1);
    std::vector<double> best(assignment.k(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const int j = assignment.labels[i];
        const double d = (centers[i] - assignment.centroids[j]).norm();
        if (d < best[j] || (d == best[j] && view_ids[i] < refs.reference_view_ids[j])) {
            best[j] = d;
            refs.reference_view_ids[j] = view_ids[i];
        }
    }
    for (int id : refs.reference_view_ids) {
        if (id < 0) throw NumericError("select_references: empty cluster");
    }
    return refs;
}

/// Clustering of a scene's views by camera center, with per-cluster reference
/// views. Lookup tables keyed by view id.
class Clustering {
public:
    Clustering(ClusterAssignment assignment, ReferenceSet references, std::vector<int> view_ids)
        : assignment_(std::move(assignment)), references_(std::move(references)), view_ids_(std::move(view_ids)) {}

    const ClusterAssignment& assignment() const { return assignment_; }
    const ReferenceSet& references() const { return references_; }
    const std::vector<int>& view_ids() const { return view_ids_; }
    int k() const { return assignment_.k(); }

    int assign_cluster(int view_id) const {
        for (std::size_t i = 0; i < view_ids_.size(); ++i) {
            if (view_ids_[i] == view_id) return assignment_.labels[i];
        }
        throw ValidationError("view " + std::to_string(view_id) + " was not part of the clustering");
    }

    int reference_of(int view_id) const { return references_.reference_view_ids[assign_cluster(view_id)]; }

    bool is_reference(int view_id) const {
        const auto& ids = references_.reference_view_ids;
        return std::find(ids.begin(), ids.end(), view_id) != ids.end();
    }

private:
    ClusterAssignment assignment_;
    ReferenceSet references_;
    std::vector<int> view_ids_;
};

inline Clustering cluster_views(const SceneBundle& bundle, int k, std::uint64_t seed) {
    std::vector<Eigen::Vector3d> centers;
    std::vector<int> ids;
    for (const auto& v : bundle.views) {
        centers.push_back(camera_center(v.pose));
        ids.push_back(v.id);
    }
    ClusterAssignment assignment = kmeans(centers, k, seed);
    ReferenceSet refs = select_references(assignment, centers, ids);
    return Clustering(std::move(assignment), std::move(refs), std::move(ids));
}

}  // namespace splatpaint
