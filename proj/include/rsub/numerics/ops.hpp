#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rsub/numerics/tape.hpp"

/// Differentiable ops recorded on a Tape. Shapes follow the kernels.
namespace rsub::ad {

Var matmul(Var a, Var b);
/// a + b, where b may be a single row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, float factor);
Var hadamard(Var a, Var b);
Var row_softmax(Var x);
Var gelu(Var x);
Var sigmoid(Var x);
Var rms_normalize(Var x, Var gain);
Var embedding_gather(Var table, std::span<const int> ids);
/// Mean cross-entropy over rows; returns a 1x1 node.
Var cross_entropy(Var logits, std::span<const int> targets);
Var sum(Var x);
Var transpose(Var x);

/// Multi-head causal self-attention over packed rows. `qkv` holds
/// n_seq * seq_len rows of [q | k | v], each of width `width`.
Var causal_attention(Var qkv, std::size_t n_seq, std::size_t seq_len, std::size_t heads);

Var gather_rows(Var x, std::span<const std::size_t> rows);
/// Copy of `base` whose listed rows are replaced by the rows of `replacement`.
Var scatter_rows(Var base, Var replacement, std::span<const std::size_t> rows);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var gather_cols(Var x, std::span<const std::size_t> cols);

/// d x d skew-symmetric matrix from its strict upper triangle, row-major,
/// stored as a 1 x d(d-1)/2 row.
Var skew_from_upper(Var upper, std::size_t d);
Var cayley(Var skew);

}  // namespace rsub::ad
