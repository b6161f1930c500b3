#ifndef DSTPROF_SIMULATOR_HPP
#define DSTPROF_SIMULATOR_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dstprof/errors.hpp"

namespace dstprof::sim {

// ---------------------------------------------------------------------------
// Bit generation recipe (bit-exact across implementations):
//   s0  = mix(master_seed XOR (t * 0x9E3779B97F4A7C15))
//   s_r = mix(s0 XOR (r * 0xBF58476D1CE4E5B9))
// where mix is the SplitMix64 finalizer; record bits are then the most
// significant bits of successive SplitMix64 outputs seeded with s_r.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kMix1 = 0xBF58476D1CE4E5B9ULL;
inline constexpr std::uint64_t kMix2 = 0x94D049BB133111EBULL;

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * kMix1;
    z = (z ^ (z >> 27)) * kMix2;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state = 0;
    std::uint64_t next() {
        state += kGolden;
        return splitmix_finalize(state);
    }
};

inline std::uint64_t record_stream_state(std::uint64_t master_seed, std::uint64_t trial,
                                         std::uint64_t record) {
    std::uint64_t s0 = splitmix_finalize(master_seed ^ (trial * kGolden));
    return splitmix_finalize(s0 ^ (record * kMix1));
}

// Deterministic pseudorandom bit stream for (master_seed, trial, record);
// never exhausts.
class StreamBits {
  public:
    StreamBits(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t record) {
        gen_.state = record_stream_state(master_seed, trial, record);
    }
    int next_bit() {
        if (left_ == 0) {
            word_ = gen_.next();
            left_ = 64;
        }
        int b = static_cast<int>(word_ >> 63);
        word_ <<= 1;
        --left_;
        return b;
    }

  private:
    SplitMix64 gen_;
    std::uint64_t word_ = 0;
    int left_ = 0;
};

// Polymorphic source used by the public build_tree; the Monte Carlo path
// below uses StreamBits directly.
struct BitSource {
    virtual ~BitSource() = default;
    virtual int next_bit() = 0;
};

class ExplicitBitSource final : public BitSource {
  public:
    explicit ExplicitBitSource(std::string_view bits) : bits_(bits) {}
    int next_bit() override {
        if (pos_ >= bits_.size()) throw BitExhausted("explicit bit source exhausted");
        char c = bits_[pos_++];
        if (c != '0' && c != '1') throw DomainError("bit string must be over {0,1}");
        return c - '0';
    }

  private:
    std::string bits_;
    std::size_t pos_ = 0;
};

class PseudorandomBitSource final : public BitSource {
  public:
    PseudorandomBitSource(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t record)
        : s_(master_seed, trial, record) {}
    int next_bit() override { return s_.next_bit(); }

  private:
    StreamBits s_;
};

// ---------------------------------------------------------------------------
// Tree and profiles
// ---------------------------------------------------------------------------

// Index-based node array; node i holds the i-th inserted record.
struct DstTree {
    struct Node {
        std::int32_t left = -1;
        std::int32_t right = -1;
    };
    std::vector<Node> nodes;

    long n() const { return static_cast<long>(nodes.size()); }

    // Routes one record by its bits to the first empty slot.  Returns the
    // depth at which it was stored.
    template <class Src>
    int insert_record(Src& src) {
        if (nodes.empty()) {
            nodes.emplace_back();
            return 0;
        }
        std::int32_t cur = 0;
        int depth = 0;
        for (;;) {
            std::int32_t& slot = src.next_bit() ? nodes[cur].right : nodes[cur].left;
            ++depth;
            if (slot < 0) {
                slot = static_cast<std::int32_t>(nodes.size());
                nodes.emplace_back();
                return depth;
            }
            cur = slot;
        }
    }
};

// Per-level external/internal counts of one tree plus height and saturation
// level.  For the empty tree: external = (1), internal = (), H = 0 and S is
// reported as -1 (no level is fully internal) -- both are conventions, the
// model does not define them for n = 0.
struct ProfileSummary {
    long n = 0;
    std::vector<std::uint64_t> external;  // B_{n,k}, dense up to max occupied level
    std::vector<std::uint64_t> internal;  // I_{n,k}
    long height = 0;                      // max{k : B_{n,k} > 0}
    long saturation = -1;                 // max{k : I_{n,k} = 2^k}, -1 if none

    // levels past the stored vectors are implicitly zero
    std::uint64_t external_at(long k) const {
        return k >= 0 && static_cast<std::size_t>(k) < external.size()
                   ? external[static_cast<std::size_t>(k)]
                   : 0;
    }
    std::uint64_t internal_at(long k) const {
        return k >= 0 && static_cast<std::size_t>(k) < internal.size()
                   ? internal[static_cast<std::size_t>(k)]
                   : 0;
    }

    void validate() const;                // throws on violated invariants
};

DstTree build_tree(std::vector<std::unique_ptr<BitSource>>& sources, long n);
DstTree build_tree(const std::vector<std::string>& records);

ProfileSummary profiles(const DstTree& tree);

// Depths of all n+1 external slots in DFS preorder (left before right).
std::vector<int> external_depths(const DstTree& tree);

// Depth of a uniformly random external node (uniform over the n+1 slots,
// chosen by rejection sampling on the source bits -- not by random walk).
int sample_unsuccessful_depth(const DstTree& tree, BitSource& source);

// ---------------------------------------------------------------------------
// Monte Carlo batches
// ---------------------------------------------------------------------------

struct StatSelect {
    bool profile = true;
    bool height = true;
    bool saturation = true;
    bool depth = true;
};

struct TrialConfig {
    long n = 0;
    long trials = 1;
    std::uint64_t master_seed = 0;
    StatSelect stats;
    int threads = 1;
};

// Integer-exact accumulators: merging shards is associative and commutative,
// so the merged result is independent of sharding and thread schedule.
struct EmpiricalMoments {
    long n = 0;
    std::uint64_t trials = 0;
    StatSelect stats;
    std::vector<unsigned __int128> sum_B, sum_B2;   // per level
    std::vector<unsigned __int128> sum_I, sum_I2;
    std::vector<std::uint64_t> hist_height;
    std::vector<std::uint64_t> hist_saturation;     // index 0 holds S = -1
    std::vector<std::uint64_t> hist_depth;          // sampled U_n

    void accumulate(const ProfileSummary& p, int u_depth);
    void merge(const EmpiricalMoments& other);

    double mean_B(std::size_t k) const;
    double var_B(std::size_t k) const;    // unbiased (trials - 1 denominator)
    double mean_I(std::size_t k) const;
    double var_I(std::size_t k) const;
    double mean_height() const;
    double mean_of(const std::vector<std::uint64_t>& hist, long offset) const;
};

// Trial t, record r draws from the stream (master_seed, t, r); the
// unsuccessful-search sample of trial t uses (master_seed, t, n).  Identical
// config (any thread count) gives bit-identical output.
EmpiricalMoments run_trials(const TrialConfig& config);

}  // namespace dstprof::sim

#endif
