#include "simt/stream_state.hpp"

#include <algorithm>
#include <string>

#include "simt/error.hpp"

namespace simt {

StreamState::StreamState(int source_len, int initial_prefix, TokenId bos)
    : source_len_(source_len), j_(std::min(initial_prefix, source_len)), emitted_{bos} {
    if (source_len < 1) {
        throw ValidationError("stream: source length must be >= 1");
    }
    if (initial_prefix < 1) {
        throw ValidationError("stream: initial prefix must be >= 1");
    }
}

std::span<const TokenId> StreamState::target_prefix() const {
    return std::span<const TokenId>(emitted_).subspan(1);
}

void StreamState::read() {
    if (j_ >= source_len_) {
        throw ValidationError("stream: READ past end of source (j=" + std::to_string(j_) + ")");
    }
    ++j_;
    ++r_c_;
}

void StreamState::write(TokenId token) {
    emitted_.push_back(token);
    g_record_.push_back(j_);
    r_c_ = 0;
}

void StreamState::apply(const Decision &decision) {
    if (decision.is_write()) {
        write(decision.token());
    } else {
        read();
    }
}

} // namespace simt
