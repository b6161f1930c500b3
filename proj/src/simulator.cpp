#include "dstprof/simulator.hpp"

#include <algorithm>
#include <bit>
#include <thread>

namespace dstprof::sim {

void ProfileSummary::validate() const {
    unsigned __int128 bsum = 0, isum = 0;
    for (auto b : external) bsum += b;
    for (auto i : internal) isum += i;
    if (n == 0) {
        if (!(external.size() == 1 && external[0] == 1 && internal.empty()))
            throw DomainError("ProfileSummary: bad empty-tree profile");
        return;
    }
    if (bsum != static_cast<unsigned __int128>(n) + 1)
        throw DomainError("ProfileSummary: external counts must sum to n+1");
    if (isum != static_cast<unsigned __int128>(n))
        throw DomainError("ProfileSummary: internal counts must sum to n");
    if (external.empty() || external[0] != 0 || internal.empty() || internal[0] != 1)
        throw DomainError("ProfileSummary: level-0 boundary violated");
    // fundamental relation 2 I_k = I_{k+1} + B_{k+1}
    std::size_t kmax = std::max(external.size(), internal.size());
    for (std::size_t k = 0; k + 1 <= kmax; ++k) {
        std::uint64_t ik = k < internal.size() ? internal[k] : 0;
        std::uint64_t ik1 = k + 1 < internal.size() ? internal[k + 1] : 0;
        std::uint64_t bk1 = k + 1 < external.size() ? external[k + 1] : 0;
        if (2 * ik != ik1 + bk1)
            throw DomainError("ProfileSummary: fundamental relation violated");
    }
}

DstTree build_tree(std::vector<std::unique_ptr<BitSource>>& sources, long n) {
    if (n < 0) throw DomainError("build_tree: n must be >= 0");
    if (static_cast<long>(sources.size()) < n)
        throw DomainError("build_tree: fewer sources than records");
    DstTree t;
    t.nodes.reserve(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) t.insert_record(*sources[static_cast<size_t>(i)]);
    return t;
}

DstTree build_tree(const std::vector<std::string>& records) {
    DstTree t;
    t.nodes.reserve(records.size());
    for (const auto& r : records) {
        ExplicitBitSource src(r);
        t.insert_record(src);
    }
    return t;
}

ProfileSummary profiles(const DstTree& tree) {
    ProfileSummary p;
    p.n = tree.n();
    if (p.n == 0) {
        p.external = {1};
        p.height = 0;
        p.saturation = -1;
        return p;
    }
    // iterative DFS carrying depths
    std::vector<std::pair<std::int32_t, int>> stack;
    stack.emplace_back(0, 0);
    auto bump = [](std::vector<std::uint64_t>& v, int d) {
        if (v.size() <= static_cast<size_t>(d)) v.resize(static_cast<size_t>(d) + 1, 0);
        ++v[static_cast<size_t>(d)];
    };
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        bump(p.internal, d);
        const auto& node = tree.nodes[static_cast<size_t>(idx)];
        if (node.left >= 0)
            stack.emplace_back(node.left, d + 1);
        else
            bump(p.external, d + 1);
        if (node.right >= 0)
            stack.emplace_back(node.right, d + 1);
        else
            bump(p.external, d + 1);
    }
    if (p.external.empty()) p.external = {0};
    p.height = static_cast<long>(p.external.size()) - 1;
    while (p.height > 0 && p.external[static_cast<size_t>(p.height)] == 0) --p.height;
    p.saturation = -1;
    for (long k = 0; k < static_cast<long>(p.internal.size()) && k < 63; ++k) {
        if (p.internal[static_cast<size_t>(k)] == (1ULL << k))
            p.saturation = k;
        else
            break;
    }
    return p;
}

std::vector<int> external_depths(const DstTree& tree) {
    std::vector<int> out;
    if (tree.n() == 0) {
        out.push_back(0);
        return out;
    }
    out.reserve(static_cast<size_t>(tree.n()) + 1);
    // preorder, left before right, so the i-th external is well-defined
    std::vector<std::pair<std::int32_t, int>> stack;
    stack.emplace_back(0, 0);
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        const auto& node = tree.nodes[static_cast<size_t>(idx)];
        // push right first so that left is processed first
        if (node.right >= 0)
            stack.emplace_back(node.right, d + 1);
        if (node.left >= 0)
            stack.emplace_back(node.left, d + 1);
        if (node.left < 0) out.push_back(d + 1);
        if (node.right < 0) out.push_back(d + 1);
    }
    return out;
}

namespace {

// uniform index in [0, m) by rejection on ceil(log2 m) bits
template <class Src>
std::uint64_t uniform_below(std::uint64_t m, Src& src) {
    if (m <= 1) return 0;
    int width = std::bit_width(m - 1);
    for (;;) {
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v = (v << 1) | static_cast<std::uint64_t>(src.next_bit());
        if (v < m) return v;
    }
}

}  // namespace

int sample_unsuccessful_depth(const DstTree& tree, BitSource& source) {
    std::vector<int> depths = external_depths(tree);
    std::uint64_t idx = uniform_below(depths.size(), source);
    return depths[static_cast<size_t>(idx)];
}

void EmpiricalMoments::accumulate(const ProfileSummary& p, int u_depth) {
    ++trials;
    auto grow128 = [](std::vector<unsigned __int128>& v, std::size_t len) {
        if (v.size() < len) v.resize(len, 0);
    };
    if (stats.profile) {
        grow128(sum_B, p.external.size());
        grow128(sum_B2, p.external.size());
        for (std::size_t k = 0; k < p.external.size(); ++k) {
            unsigned __int128 b = p.external[k];
            sum_B[k] += b;
            sum_B2[k] += b * b;
        }
        grow128(sum_I, p.internal.size());
        grow128(sum_I2, p.internal.size());
        for (std::size_t k = 0; k < p.internal.size(); ++k) {
            unsigned __int128 b = p.internal[k];
            sum_I[k] += b;
            sum_I2[k] += b * b;
        }
    }
    if (stats.height) {
        if (hist_height.size() <= static_cast<size_t>(p.height))
            hist_height.resize(static_cast<size_t>(p.height) + 1, 0);
        ++hist_height[static_cast<size_t>(p.height)];
    }
    if (stats.saturation) {
        std::size_t slot = static_cast<size_t>(p.saturation + 1);  // -1 at index 0
        if (hist_saturation.size() <= slot) hist_saturation.resize(slot + 1, 0);
        ++hist_saturation[slot];
    }
    if (stats.depth && u_depth >= 0) {
        if (hist_depth.size() <= static_cast<size_t>(u_depth))
            hist_depth.resize(static_cast<size_t>(u_depth) + 1, 0);
        ++hist_depth[static_cast<size_t>(u_depth)];
    }
}

void EmpiricalMoments::merge(const EmpiricalMoments& other) {
    if (n != other.n) throw DomainError("EmpiricalMoments::merge: mismatched n");
    trials += other.trials;
    auto add128 = [](std::vector<unsigned __int128>& a,
                     const std::vector<unsigned __int128>& b) {
        if (a.size() < b.size()) a.resize(b.size(), 0);
        for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    };
    auto add64 = [](std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
        if (a.size() < b.size()) a.resize(b.size(), 0);
        for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    };
    add128(sum_B, other.sum_B);
    add128(sum_B2, other.sum_B2);
    add128(sum_I, other.sum_I);
    add128(sum_I2, other.sum_I2);
    add64(hist_height, other.hist_height);
    add64(hist_saturation, other.hist_saturation);
    add64(hist_depth, other.hist_depth);
}

namespace {
double u128_to_double(unsigned __int128 v) { return static_cast<double>(v); }

double mean_from(const std::vector<unsigned __int128>& s, std::size_t k, std::uint64_t t) {
    if (t == 0 || k >= s.size()) return 0.0;
    return u128_to_double(s[k]) / static_cast<double>(t);
}

double var_from(const std::vector<unsigned __int128>& s,
                const std::vector<unsigned __int128>& s2, std::size_t k, std::uint64_t t) {
    if (t < 2 || k >= s.size()) return 0.0;
    // exact integer numerator: T*sum(x^2) - sum(x)^2
    unsigned __int128 a = s2[k] * t;
    unsigned __int128 b = s[k] * s[k];
    double num = u128_to_double(a) - u128_to_double(b);
    return num / (static_cast<double>(t) * static_cast<double>(t - 1));
}
}  // namespace

double EmpiricalMoments::mean_B(std::size_t k) const { return mean_from(sum_B, k, trials); }
double EmpiricalMoments::var_B(std::size_t k) const { return var_from(sum_B, sum_B2, k, trials); }
double EmpiricalMoments::mean_I(std::size_t k) const { return mean_from(sum_I, k, trials); }
double EmpiricalMoments::var_I(std::size_t k) const { return var_from(sum_I, sum_I2, k, trials); }

double EmpiricalMoments::mean_of(const std::vector<std::uint64_t>& hist, long offset) const {
    unsigned __int128 total = 0;
    unsigned __int128 weighted = 0;
    long double signed_weighted = 0;
    for (std::size_t i = 0; i < hist.size(); ++i) {
        total += hist[i];
        signed_weighted += static_cast<long double>(hist[i]) *
                           (static_cast<long double>(i) + static_cast<long double>(offset));
    }
    (void)weighted;
    if (total == 0) return 0.0;
    return static_cast<double>(signed_weighted / static_cast<long double>(total));
}

double EmpiricalMoments::mean_height() const { return mean_of(hist_height, 0); }

namespace {

EmpiricalMoments run_range(const TrialConfig& cfg, long t_begin, long t_end) {
    EmpiricalMoments acc;
    acc.n = cfg.n;
    acc.stats = cfg.stats;
    DstTree tree;
    for (long t = t_begin; t < t_end; ++t) {
        tree.nodes.clear();
        tree.nodes.reserve(static_cast<size_t>(cfg.n));
        for (long r = 0; r < cfg.n; ++r) {
            StreamBits src(cfg.master_seed, static_cast<std::uint64_t>(t),
                           static_cast<std::uint64_t>(r));
            tree.insert_record(src);
        }
        ProfileSummary p = profiles(tree);
        int u = -1;
        if (cfg.stats.depth) {
            StreamBits usrc(cfg.master_seed, static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(cfg.n));
            std::vector<int> depths = external_depths(tree);
            u = depths[static_cast<size_t>(uniform_below(depths.size(), usrc))];
        }
        acc.accumulate(p, u);
    }
    return acc;
}

}  // namespace

EmpiricalMoments run_trials(const TrialConfig& config) {
    if (config.trials < 1) throw DomainError("run_trials: trials must be >= 1");
    if (config.n < 0) throw DomainError("run_trials: n must be >= 0");
    int threads = std::max(1, config.threads);
    if (threads == 1 || config.trials < 2 * threads)
        return run_range(config, 0, config.trials);

    std::vector<EmpiricalMoments> parts(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    long chunk = (config.trials + threads - 1) / threads;
    for (int i = 0; i < threads; ++i) {
        long lo = i * chunk;
        long hi = std::min(config.trials, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, i, lo, hi] { parts[static_cast<size_t>(i)] = run_range(config, lo, hi); });
    }
    for (auto& th : pool) th.join();
    EmpiricalMoments acc = std::move(parts[0]);
    for (std::size_t i = 1; i < parts.size(); ++i)
        if (parts[i].trials > 0) acc.merge(parts[i]);
    return acc;
}

}  // namespace dstprof::sim
