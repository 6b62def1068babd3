#pragma once

#include <span>
#include <vector>

#include "simt/types.hpp"

namespace simt {

/// One in-flight simultaneous decoding session.
///
/// `j` counts consumed source tokens and never decreases; `g_record[t]` is the
/// value of `j` when target token t+1 was written. The emitted sequence starts
/// with BOS, which is a decoder sentinel and never counted.
class StreamState {
  public:
    /// `initial_prefix` is clamped to `source_len`; the initial read counts as
    /// one continuous READ.
    StreamState(int source_len, int initial_prefix, TokenId bos);

    int j() const { return j_; }
    int source_len() const { return source_len_; }
    int continuous_reads() const { return r_c_; }
    bool source_exhausted() const { return j_ >= source_len_; }

    /// Emitted tokens including the leading BOS.
    const TokenSeq &emitted() const { return emitted_; }
    /// Emitted tokens without BOS, i.e. the target prefix y_<i.
    std::span<const TokenId> target_prefix() const;
    const std::vector<int> &g_record() const { return g_record_; }
    std::size_t writes() const { return g_record_.size(); }

    /// Throws ValidationError if the source is already exhausted.
    void read();
    void write(TokenId token);
    void apply(const Decision &decision);

  private:
    int source_len_;
    int j_;
    int r_c_ = 1;
    TokenSeq emitted_;
    std::vector<int> g_record_;
};

} // namespace simt
