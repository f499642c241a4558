#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include "fptab/dataset.hpp"
#include "fptab/errors.hpp"

namespace fptab {

/// Rounds to `digits` significant digits; used to absorb accumulation-order
/// noise when comparing distances for tie expansion.
inline double round_sig(double x, int digits = 12) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    double mag = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
    return std::round(x * mag) / mag;
}

struct Neighbourhood {
    std::vector<std::size_t> members;  // dataset row indices
    double max_distance = 0.0;
};

/// Index over records for mixed-type nearest-neighbour queries.
///
/// Squared distance = sum over numeric query attributes of ((x-y)/sigma)^2
/// plus a 0/1 mismatch per categorical query attribute. Numeric dimensions
/// with sigma = 0 are dropped. Records with a missing value in any query
/// attribute are excluded from the index; a query record's own missing
/// dimensions are dropped for that query only.
class NeighbourIndex {
public:
    NeighbourIndex(const Dataset& data, std::vector<std::size_t> query_attrs)
        : query_attrs_(std::move(query_attrs)) {
        if (query_attrs_.empty()) throw InvalidParameter("query attribute set is empty");
        std::size_t nd = query_attrs_.size();
        numeric_.resize(nd);
        sigma_.assign(nd, 0.0);
        token_ids_.resize(nd);

        for (std::size_t di = 0; di < nd; ++di)
            numeric_[di] = data.feature(query_attrs_[di]).kind == AttrKind::numeric;

        // sigma from the indexed data, over non-missing cells
        for (std::size_t di = 0; di < nd; ++di) {
            if (!numeric_[di]) continue;
            double s = 0, s2 = 0;
            std::size_t m = 0;
            for (const auto& row : data.rows) {
                const Cell& c = row[query_attrs_[di]];
                if (c.missing()) continue;
                s += c.num;
                s2 += c.num * c.num;
                ++m;
            }
            if (m > 1) {
                double var = (s2 - s * s / static_cast<double>(m)) / static_cast<double>(m - 1);
                sigma_[di] = var > 0 ? std::sqrt(var) : 0.0;
            }
        }

        for (std::size_t r = 0; r < data.n(); ++r) {
            bool usable = true;
            for (std::size_t di = 0; di < nd && usable; ++di)
                if (data.rows[r][query_attrs_[di]].missing()) usable = false;
            if (!usable) continue;
            rows_.push_back(r);
            for (std::size_t di = 0; di < nd; ++di)
                points_.push_back(encode(data.rows[r][query_attrs_[di]], di, true));
        }
        if (rows_.empty()) throw EmptyIndex("no records usable for the query attributes");
        build_tree();
    }

    std::size_t size() const { return rows_.size(); }

    /// k nearest records (k is a minimum) expanded with all distance ties.
    Neighbourhood select_neighbours(const std::vector<Cell>& record, std::size_t k) const {
        if (k < 1) throw InvalidParameter("k must be >= 1");
        EncodedQuery q = encode_query(record);
        std::size_t kk = std::min(k, rows_.size());

        // max-heap of the kk best distances
        std::priority_queue<double> best;
        if (q.complete) {
            knn_search(0, q, kk, best);
        } else {
            for (std::size_t p = 0; p < rows_.size(); ++p) {
                double d = distance(q, p);
                if (best.size() < kk) best.push(d);
                else if (d < best.top()) { best.pop(); best.push(d); }
            }
        }
        double radius = round_sig(best.top());

        Neighbourhood nb;
        nb.max_distance = radius;
        if (q.complete) {
            radius_search(0, q, radius, nb.members);
        } else {
            for (std::size_t p = 0; p < rows_.size(); ++p)
                if (round_sig(distance(q, p)) <= radius) nb.members.push_back(rows_[p]);
        }
        std::sort(nb.members.begin(), nb.members.end());
        return nb;
    }

private:
    struct EncodedQuery {
        std::vector<double> vals;
        std::vector<bool> active;
        bool complete = true;
    };

    struct Node {
        std::size_t point = 0;       // index into rows_/points_
        double mu = 0.0;             // split radius
        int inner = -1, outer = -1;  // child node ids
        std::size_t begin = 0, count = 0;  // leaf payload
        bool leaf = false;
    };

    double encode(const Cell& c, std::size_t di, bool indexing) {
        if (numeric_[di]) return c.num;
        auto& ids = token_ids_[di];
        auto it = ids.find(c.cat);
        if (it != ids.end()) return static_cast<double>(it->second);
        if (!indexing) return -1.0;  // unseen token never matches
        std::size_t id = ids.size();
        ids.emplace(c.cat, id);
        return static_cast<double>(id);
    }

    EncodedQuery encode_query(const std::vector<Cell>& record) const {
        EncodedQuery q;
        std::size_t nd = query_attrs_.size();
        q.vals.resize(nd);
        q.active.resize(nd, true);
        for (std::size_t di = 0; di < nd; ++di) {
            const Cell& c = record[query_attrs_[di]];
            if (c.missing()) {
                q.active[di] = false;
                q.complete = false;
                continue;
            }
            if (numeric_[di]) {
                q.vals[di] = c.num;
            } else {
                auto it = token_ids_[di].find(c.cat);
                q.vals[di] = it == token_ids_[di].end() ? -1.0 : static_cast<double>(it->second);
            }
        }
        return q;
    }

    double distance(const EncodedQuery& q, std::size_t p) const {
        const double* pt = &points_[p * query_attrs_.size()];
        double s = 0.0;
        for (std::size_t di = 0; di < query_attrs_.size(); ++di) {
            if (!q.active[di]) continue;
            if (numeric_[di]) {
                if (sigma_[di] == 0.0) continue;
                double d = (q.vals[di] - pt[di]) / sigma_[di];
                s += d * d;
            } else {
                s += q.vals[di] != pt[di] ? 1.0 : 0.0;
            }
        }
        return std::sqrt(s);
    }

    double point_distance(std::size_t a, std::size_t b) const {
        const double* pa = &points_[a * query_attrs_.size()];
        const double* pb = &points_[b * query_attrs_.size()];
        double s = 0.0;
        for (std::size_t di = 0; di < query_attrs_.size(); ++di) {
            if (numeric_[di]) {
                if (sigma_[di] == 0.0) continue;
                double d = (pa[di] - pb[di]) / sigma_[di];
                s += d * d;
            } else {
                s += pa[di] != pb[di] ? 1.0 : 0.0;
            }
        }
        return std::sqrt(s);
    }

    static constexpr std::size_t kLeafSize = 16;

    void build_tree() {
        order_.resize(rows_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        nodes_.reserve(2 * rows_.size() / kLeafSize + 4);
        build_node(0, order_.size());
    }

    int build_node(std::size_t begin, std::size_t end) {
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        if (end - begin <= kLeafSize) {
            nodes_[static_cast<std::size_t>(id)].leaf = true;
            nodes_[static_cast<std::size_t>(id)].begin = begin;
            nodes_[static_cast<std::size_t>(id)].count = end - begin;
            return id;
        }
        std::size_t vp = order_[begin];
        std::vector<std::pair<double, std::size_t>> dists;
        dists.reserve(end - begin - 1);
        for (std::size_t i = begin + 1; i < end; ++i)
            dists.emplace_back(point_distance(vp, order_[i]), order_[i]);
        std::size_t mid = dists.size() / 2;
        std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
        double mu = dists[mid].first;
        for (std::size_t i = 0; i < dists.size(); ++i) order_[begin + 1 + i] = dists[i].second;

        std::size_t inner_end = begin + 1 + mid;
        // rearrange: [begin+1, inner_end) inside mu, [inner_end, end) outside
        std::partition(order_.begin() + static_cast<std::ptrdiff_t>(begin + 1),
                       order_.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::size_t p) { return point_distance(vp, p) < mu; });

        // recompute boundary after partition
        std::size_t split = begin + 1;
        while (split < end && point_distance(vp, order_[split]) < mu) ++split;

        nodes_[static_cast<std::size_t>(id)].point = vp;
        nodes_[static_cast<std::size_t>(id)].mu = mu;
        if (split > begin + 1 && split < end) {
            int inner = build_node(begin + 1, split);
            int outer = build_node(split, end);
            nodes_[static_cast<std::size_t>(id)].inner = inner;
            nodes_[static_cast<std::size_t>(id)].outer = outer;
        } else {
            // degenerate split (all equal distances): fall back to a leaf
            nodes_[static_cast<std::size_t>(id)].leaf = true;
            nodes_[static_cast<std::size_t>(id)].begin = begin;
            nodes_[static_cast<std::size_t>(id)].count = end - begin;
            return id;
        }
        nodes_[static_cast<std::size_t>(id)].leaf = false;
        nodes_[static_cast<std::size_t>(id)].begin = begin;
        nodes_[static_cast<std::size_t>(id)].count = 1;  // vantage point itself
        return id;
    }

    void knn_consider(double d, std::size_t kk, std::priority_queue<double>& best) const {
        if (best.size() < kk) best.push(d);
        else if (d < best.top()) { best.pop(); best.push(d); }
    }

    void knn_search(int node_id, const EncodedQuery& q, std::size_t kk,
                    std::priority_queue<double>& best) const {
        const Node& nd = nodes_[static_cast<std::size_t>(node_id)];
        if (nd.leaf) {
            for (std::size_t i = 0; i < nd.count; ++i)
                knn_consider(distance(q, order_[nd.begin + i]), kk, best);
            return;
        }
        double d = distance(q, nd.point);
        knn_consider(d, kk, best);
        double tau = best.size() < kk ? std::numeric_limits<double>::infinity() : best.top();
        if (d < nd.mu) {
            knn_search(nd.inner, q, kk, best);
            tau = best.size() < kk ? std::numeric_limits<double>::infinity() : best.top();
            if (d + tau >= nd.mu) knn_search(nd.outer, q, kk, best);
        } else {
            knn_search(nd.outer, q, kk, best);
            tau = best.size() < kk ? std::numeric_limits<double>::infinity() : best.top();
            if (d - tau <= nd.mu) knn_search(nd.inner, q, kk, best);
        }
    }

    void radius_search(int node_id, const EncodedQuery& q, double radius,
                       std::vector<std::size_t>& out) const {
        const Node& nd = nodes_[static_cast<std::size_t>(node_id)];
        if (nd.leaf) {
            for (std::size_t i = 0; i < nd.count; ++i) {
                std::size_t p = order_[nd.begin + i];
                if (round_sig(distance(q, p)) <= radius) out.push_back(rows_[p]);
            }
            return;
        }
        double d = distance(q, nd.point);
        if (round_sig(d) <= radius) out.push_back(rows_[nd.point]);
        double slack = radius * (1.0 + 1e-9) + 1e-12;
        if (d - slack < nd.mu) radius_search(nd.inner, q, radius, out);
        if (d + slack >= nd.mu) radius_search(nd.outer, q, radius, out);
    }

    std::vector<std::size_t> query_attrs_;
    std::vector<bool> numeric_;
    std::vector<double> sigma_;
    std::vector<std::unordered_map<std::string, std::size_t>> token_ids_;
    std::vector<std::size_t> rows_;    // dataset row per indexed point
    std::vector<double> points_;       // encoded, row-major
    std::vector<std::size_t> order_;   // permutation of point ids for the tree
    std::vector<Node> nodes_;
};

}  // namespace fptab
