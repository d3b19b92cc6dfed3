#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chamberlens/error.hpp"
#include "chamberlens/parallel.hpp"
#include "chamberlens/rng.hpp"
#include "chamberlens/style.hpp"

namespace chamberlens {

struct Standardized {
    FeatureMatrix matrix;
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::size_t> flagged; // columns with std < 1e-12, zeroed
};

inline constexpr double kDegenerateStd = 1e-12;

/// Per-column z-scores using the population standard deviation.
inline Standardized standardize(const FeatureMatrix& m) {
    const std::size_t n = m.row_count();
    const std::size_t d = m.dim_count();
    if (n < 2) {
        throw ValidationError("standardize needs at least two rows");
    }
    Standardized out{m, std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), {}};
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += m.at(i, j);
        }
        const double mean = sum / double(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = m.at(i, j) - mean;
            ss += dev * dev;
        }
        const double sd = std::sqrt(ss / double(n));
        out.means[j] = mean;
        out.stds[j] = sd;
        const bool degenerate = sd < kDegenerateStd;
        if (degenerate) {
            out.flagged.push_back(j);
        }
        for (std::size_t i = 0; i < n; ++i) {
            out.matrix.values[i * d + j] = degenerate ? 0.0 : (m.at(i, j) - mean) / sd;
        }
    }
    return out;
}

struct KMeansOptions {
    std::size_t k = 6;
    std::uint64_t seed = 0;
    std::size_t max_iters = 300;
    double tol = 1e-6;
    std::size_t restarts = 1;
    unsigned threads = thread_count();
};

struct TextClustering {
    std::size_t k = 0;
    std::size_t dims = 0;
    std::uint64_t seed = 0; // seed of the kept run
    std::vector<std::int32_t> labels;
    std::vector<double> centroids; // k x dims, row-major
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace; // after each assignment step
    std::size_t empty_clusters = 0;

    std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dims, dims}; }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

/// Sum of squared distances from each row to its labelled centroid.
inline double compute_inertia(const FeatureMatrix& m, const TextClustering& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.row_count(); ++i) {
        s += squared_distance(m.row(i), c.centroid(static_cast<std::size_t>(c.labels[i])));
    }
    return s;
}

namespace detail {

// Reductions run over fixed-size row blocks combined in block order, so the
// floating-point result does not depend on the worker count.
inline constexpr std::size_t kReduceBlock = 4096;

class LloydRun {
public:
    LloydRun(const FeatureMatrix& m, const KMeansOptions& opt, std::uint64_t seed)
        : m_(m), opt_(opt), n_(m.row_count()), d_(m.dim_count()), k_(opt.k) {
        out_.k = k_;
        out_.dims = d_;
        out_.seed = seed;
        out_.labels.assign(n_, 0);
        out_.centroids.assign(k_ * d_, 0.0);
        dist_.assign(n_, 0.0);
        seed_plus_plus(seed);
    }

    TextClustering run() {
        for (std::size_t iter = 0; iter < opt_.max_iters; ++iter) {
            assign();
            repair_empty();
            out_.inertia_trace.push_back(block_sum(dist_));
            const double shift = update();
            ++out_.iterations;
            if (shift < opt_.tol) {
                break;
            }
        }
        assign();
        out_.inertia = block_sum(dist_);
        out_.inertia_trace.push_back(out_.inertia);
        std::vector<std::size_t> sizes(k_, 0);
        for (const auto l : out_.labels) {
            ++sizes[static_cast<std::size_t>(l)];
        }
        out_.empty_clusters = static_cast<std::size_t>(std::count(sizes.begin(), sizes.end(), 0u));
        return std::move(out_);
    }

private:
    std::span<double> centroid(std::size_t c) { return {out_.centroids.data() + c * d_, d_}; }

    // Greedy k-means++: each step draws 2 + ln k candidates by D^2 sampling
    // and keeps the one that lowers the total squared distance most.
    void seed_plus_plus(std::uint64_t seed) {
        Rng rng(seed);
        std::vector<char> chosen(n_, 0);
        std::vector<double> nearest(n_, std::numeric_limits<double>::infinity());
        const std::size_t trials = 2 + static_cast<std::size_t>(std::log(double(k_)));
        std::vector<double> trial(n_, 0.0);
        std::size_t pick = static_cast<std::size_t>(rng.below(n_));
        for (std::size_t c = 0; c < k_; ++c) {
            if (c > 0) {
                const double total = block_sum(nearest);
                if (total > 0.0) {
                    double best_potential = std::numeric_limits<double>::infinity();
                    for (std::size_t t = 0; t < trials; ++t) {
                        const std::size_t cand = sample_d2(rng, nearest, total);
                        const auto row = m_.row(cand);
                        for (std::size_t i = 0; i < n_; ++i) {
                            trial[i] = std::min(nearest[i], squared_distance(m_.row(i), row));
                        }
                        const double potential = block_sum(trial);
                        if (potential < best_potential) {
                            best_potential = potential;
                            pick = cand;
                        }
                    }
                } else {
                    // every remaining row coincides with a centroid
                    pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
                }
            }
            chosen[pick] = 1;
            const auto src = m_.row(pick);
            std::copy(src.begin(), src.end(), centroid(c).begin());
            for (std::size_t i = 0; i < n_; ++i) {
                nearest[i] = std::min(nearest[i], squared_distance(m_.row(i), src));
            }
        }
    }

    std::size_t sample_d2(Rng& rng, const std::vector<double>& nearest, double total) const {
        const double r = rng.uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            acc += nearest[i];
            if (acc > r && nearest[i] > 0.0) {
                return i;
            }
        }
        for (std::size_t i = n_; i-- > 0;) { // rounding at the tail
            if (nearest[i] > 0.0) {
                return i;
            }
        }
        return 0;
    }

    void assign() {
        parallel_for(n_, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                std::size_t best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k_; ++c) {
                    const double dd = squared_distance(m_.row(i), out_.centroid(c));
                    if (dd < best_d) {
                        best_d = dd;
                        best = c;
                    }
                }
                out_.labels[i] = static_cast<std::int32_t>(best);
                dist_[i] = best_d;
            }
        }, opt_.threads);
    }

    // An empty cluster takes over the row farthest from its own centroid.
    void repair_empty() {
        std::vector<std::size_t> sizes(k_, 0);
        for (const auto l : out_.labels) {
            ++sizes[static_cast<std::size_t>(l)];
        }
        for (std::size_t c = 0; c < k_; ++c) {
            if (sizes[c] != 0) {
                continue;
            }
            std::size_t far = n_;
            for (std::size_t i = 0; i < n_; ++i) {
                if (sizes[static_cast<std::size_t>(out_.labels[i])] > 1 && (far == n_ || dist_[i] > dist_[far])) {
                    far = i;
                }
            }
            if (far == n_) {
                break;
            }
            --sizes[static_cast<std::size_t>(out_.labels[far])];
            const auto src = m_.row(far);
            std::copy(src.begin(), src.end(), centroid(c).begin());
            out_.labels[far] = static_cast<std::int32_t>(c);
            dist_[far] = 0.0;
            sizes[c] = 1;
        }
    }

    // Moves centroids to cluster means; returns the largest centroid shift.
    double update() {
        const std::size_t blocks = (n_ + kReduceBlock - 1) / kReduceBlock;
        std::vector<double> sums(blocks * k_ * d_, 0.0);
        std::vector<std::size_t> counts(blocks * k_, 0);
        parallel_for(blocks, [&](std::size_t begin, std::size_t end) {
            for (std::size_t b = begin; b < end; ++b) {
                double* s = sums.data() + b * k_ * d_;
                std::size_t* cnt = counts.data() + b * k_;
                for (std::size_t i = b * kReduceBlock; i < std::min(n_, (b + 1) * kReduceBlock); ++i) {
                    const auto c = static_cast<std::size_t>(out_.labels[i]);
                    ++cnt[c];
                    const auto row = m_.row(i);
                    for (std::size_t j = 0; j < d_; ++j) {
                        s[c * d_ + j] += row[j];
                    }
                }
            }
        }, opt_.threads);
        double shift = 0.0;
        for (std::size_t c = 0; c < k_; ++c) {
            std::vector<double> total(d_, 0.0);
            std::size_t count = 0;
            for (std::size_t b = 0; b < blocks; ++b) {
                count += counts[b * k_ + c];
                for (std::size_t j = 0; j < d_; ++j) {
                    total[j] += sums[(b * k_ + c) * d_ + j];
                }
            }
            if (count == 0) {
                continue; // stays put; reported as empty at the end
            }
            for (auto& t : total) {
                t /= double(count);
            }
            shift = std::max(shift, std::sqrt(squared_distance(total, centroid(c))));
            std::copy(total.begin(), total.end(), centroid(c).begin());
        }
        return shift;
    }

    static double block_sum(const std::vector<double>& v) {
        double total = 0.0;
        for (std::size_t b = 0; b < v.size(); b += kReduceBlock) {
            double part = 0.0;
            for (std::size_t i = b; i < std::min(v.size(), b + kReduceBlock); ++i) {
                part += v[i];
            }
            total += part;
        }
        return total;
    }

    const FeatureMatrix& m_;
    const KMeansOptions& opt_;
    std::size_t n_;
    std::size_t d_;
    std::size_t k_;
    std::vector<double> dist_;
    TextClustering out_;
};

} // namespace detail

/// Lloyd's k-means with k-means++ seeding, squared Euclidean distance and
/// nearest-centroid ties broken toward the lowest index. With restarts > 1
/// seeds seed..seed+restarts-1 are tried and the lowest inertia is kept.
inline TextClustering kmeans(const FeatureMatrix& m, const KMeansOptions& opt) {
    if (opt.k < 1) {
        throw ValidationError("k must be >= 1");
    }
    if (m.row_count() < opt.k) {
        throw ValidationError("k-means needs at least k rows (" + std::to_string(m.row_count()) + " < " +
                              std::to_string(opt.k) + ")");
    }
    if (opt.restarts < 1) {
        throw ValidationError("restarts must be >= 1");
    }
    TextClustering best;
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        auto run = detail::LloydRun(m, opt, opt.seed + r).run();
        if (r == 0 || run.inertia < best.inertia) {
            best = std::move(run);
        }
    }
    return best;
}

inline TextClustering kmeans(const FeatureMatrix& m, std::size_t k, std::uint64_t seed, std::size_t max_iters = 300,
                             double tol = 1e-6) {
    KMeansOptions opt;
    opt.k = k;
    opt.seed = seed;
    opt.max_iters = max_iters;
    opt.tol = tol;
    return kmeans(m, opt);
}

// clusters.json: {k, seed, inertia, labels: {tweet_id: cluster}}

inline nlohmann::ordered_json clustering_to_json(const TextClustering& c, const std::vector<std::string>& rows) {
    nlohmann::ordered_json j;
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["inertia"] = c.inertia;
    j["iterations"] = c.iterations;
    j["empty_clusters"] = c.empty_clusters;
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        labels[rows[i]] = c.labels[i];
    }
    j["labels"] = std::move(labels);
    return j;
}

inline void write_clusters_json(const TextClustering& c, const std::vector<std::string>& rows,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << clustering_to_json(c, rows).dump() << '\n';
}

struct ClusterFile {
    std::size_t k = 0;
    std::map<std::string, std::int32_t> labels;
};

inline ClusterFile read_clusters_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ValidationError("clusters file is not valid JSON: " + path.string());
    }
    ClusterFile out;
    try {
        out.k = j.at("k").get<std::size_t>();
        for (const auto& [id, label] : j.at("labels").items()) {
            out.labels[id] = label.get<std::int32_t>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed clusters.json: ") + ex.what());
    }
    return out;
}

} // namespace chamberlens
