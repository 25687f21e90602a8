#include <cmath>

#include "mfa/errors.hpp"
#include "mfa/training.hpp"

namespace mfa {

namespace {

// y = Σ α_i c_i, α = softmax(e), e_i = qᵀ U c_i.
void attend_backward(std::span<const double> query, const std::vector<Vec>& contexts,
                     const Mat& U, const AttentionResult& fwd, std::span<const double> dy,
                     std::span<double> dquery, Mat& dU, std::vector<Vec>* dcontexts) {
  if (fwd.weights.empty()) return;
  const std::size_t n = contexts.size();
  const auto& alpha = fwd.weights;

  Vec dalpha(n);
  double expected = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dalpha[i] = dot(dy, contexts[i]);
    expected += alpha[i] * dalpha[i];
  }
  Vec de(n);
  for (std::size_t i = 0; i < n; ++i) de[i] = alpha[i] * (dalpha[i] - expected);

  Vec weighted(U.cols(), 0.0);  // Σ de_i c_i
  for (std::size_t i = 0; i < n; ++i) axpy(de[i], contexts[i], weighted);

  axpy(1.0, matvec(U, weighted), dquery);
  add_outer(dU, query, weighted);

  if (dcontexts != nullptr) {
    const Vec projected = matvec_t(U, query);
    for (std::size_t i = 0; i < n; ++i) {
      axpy(alpha[i], dy, (*dcontexts)[i]);
      axpy(de[i], projected, (*dcontexts)[i]);
    }
  }
}

// Gradient w.r.t. z of out = φ(W z + b). Accumulates dW, db.
Vec fusion_backward(const FusionTrace& t, const Mat& W, Activation act,
                    std::span<const double> dout, Mat& dW, Mat& db) {
  Vec dpre(dout.size());
  for (std::size_t k = 0; k < dout.size(); ++k) {
    dpre[k] = dout[k] * activate_grad_from_output(t.out[k], act);
  }
  add_outer(dW, dpre, t.z);
  axpy(1.0, dpre, db.flat());
  return matvec_t(W, dpre);
}

struct LstmGrads {
  Vec dx, dh_prev, dc_prev;
};

LstmGrads lstm_backward(const LstmTrace& t, const ModelParams& p, bool cell_output_tanh,
                        std::span<const double> dh, std::span<const double> dc_in,
                        Gradients& g) {
  const std::size_t n = t.h.size();
  std::array<Vec, 4> da;
  for (auto& v : da) v.resize(n);
  LstmGrads out;
  out.dc_prev.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d_o = dh[k] * t.c_out[k];
    const double dcout_dc = cell_output_tanh ? 1.0 - t.c_out[k] * t.c_out[k] : 1.0;
    const double dc = dc_in[k] + dh[k] * t.o[k] * dcout_dc;
    const double d_i = dc * t.g[k];
    const double d_g = dc * t.i[k];
    const double d_f = dc * t.c_prev[k];
    out.dc_prev[k] = dc * t.f[k];
    da[ModelParams::kInput][k] = d_i * t.i[k] * (1.0 - t.i[k]);
    da[ModelParams::kForget][k] = d_f * t.f[k] * (1.0 - t.f[k]);
    da[ModelParams::kOutput][k] = d_o * t.o[k] * (1.0 - t.o[k]);
    da[ModelParams::kCell][k] = d_g * (1.0 - t.g[k] * t.g[k]);
  }
  out.dx.assign(t.x.size(), 0.0);
  out.dh_prev.assign(n, 0.0);
  for (int gate = 0; gate < 4; ++gate) {
    add_outer(g.lstm_W[gate], da[gate], t.x);
    add_outer(g.lstm_U[gate], da[gate], t.h_prev);
    axpy(1.0, da[gate], g.lstm_b[gate].flat());
    matvec_t_acc(p.lstm_W[gate], da[gate], out.dx);
    matvec_t_acc(p.lstm_U[gate], da[gate], out.dh_prev);
  }
  return out;
}

void mask_in_place(Vec& v, const Vec& mask) {
  if (mask.empty()) return;
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= mask[k];
}

// Splits d[first | semantic | w_v⊙temporal | w_f⊙motion] and backprops through the
// importance scaling. Returns gradients w.r.t. the attended vectors.
struct SlotGrads {
  Vec first, semantic, temporal, motion;
};

SlotGrads split_fusion_grad(const Vec& dz, std::size_t first_width, const Dims& d,
                            const Vec& temporal, const Vec& motion, const Mat& imp_temporal,
                            const Mat& imp_motion, Mat& dimp_temporal, Mat& dimp_motion) {
  SlotGrads s;
  auto it = dz.begin();
  s.first.assign(it, it + static_cast<std::ptrdiff_t>(first_width));
  it += static_cast<std::ptrdiff_t>(first_width);
  s.semantic.assign(it, it + static_cast<std::ptrdiff_t>(d.embed));
  it += static_cast<std::ptrdiff_t>(d.embed);
  Vec dt(it, it + static_cast<std::ptrdiff_t>(d.temporal));
  it += static_cast<std::ptrdiff_t>(d.temporal);
  Vec dm(it, it + static_cast<std::ptrdiff_t>(d.motion));

  s.temporal.resize(d.temporal);
  for (std::size_t k = 0; k < d.temporal; ++k) {
    dimp_temporal(k, 0) += dt[k] * temporal[k];
    s.temporal[k] = dt[k] * imp_temporal(k, 0);
  }
  s.motion.resize(d.motion);
  for (std::size_t k = 0; k < d.motion; ++k) {
    dimp_motion(k, 0) += dm[k] * motion[k];
    s.motion[k] = dm[k] * imp_motion(k, 0);
  }
  return s;
}

}  // namespace

void backward_accumulate(const ForwardTrace& trace, std::span<const TokenId> caption,
                         const ModelParams& p, Gradients& g) {
  if (!(trace.dims == p.dims) || !(g.dims == p.dims)) {
    throw ConsistencyError("backward: trace, params and gradient dims differ");
  }
  if (caption.size() != trace.steps.size() + 1) {
    throw ConsistencyError("backward: caption length " + std::to_string(caption.size()) +
                           " does not match a trace of " + std::to_string(trace.steps.size()) +
                           " steps");
  }
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    if (trace.steps[k].input != caption[k] || trace.steps[k].target != caption[k + 1]) {
      throw ConsistencyError("backward: trace was produced for a different caption (step " +
                             std::to_string(k) + ")");
    }
  }

  const Dims& d = p.dims;
  const ModelConfig& cfg = trace.config;
  const Contexts& ctx = trace.contexts;
  std::vector<Vec> dsemantic(ctx.semantic.size(), Vec(d.embed, 0.0));

  Vec dh_next(d.hidden, 0.0);
  Vec dc_next(d.hidden, 0.0);

  for (std::size_t k = trace.steps.size(); k-- > 0;) {
    const StepTrace& st = trace.steps[k];

    // softmax cross-entropy through the tied projection
    Vec dlogits = st.probs;
    dlogits[st.target] -= 1.0;
    add_outer(g.embedding, dlogits, st.projected);
    Vec dproj = matvec_t(p.embedding, dlogits);
    mask_in_place(dproj, st.drop_out);

    const Vec dz_out =
        fusion_backward(st.fuse_out, p.fuse_out_W, cfg.fusion, dproj, g.fuse_out_W, g.fuse_out_b);
    SlotGrads so = split_fusion_grad(dz_out, d.hidden, d, st.out_temporal.output,
                                     st.out_motion.output, p.imp_out_temporal, p.imp_out_motion,
                                     g.imp_out_temporal, g.imp_out_motion);

    Vec dh = std::move(so.first);
    axpy(1.0, dh_next, dh);
    const Vec& h = st.lstm.h;
    attend_backward(h, ctx.semantic, p.attn_out_semantic, st.out_semantic, so.semantic, dh,
                    g.attn_out_semantic, &dsemantic);
    attend_backward(h, ctx.temporal, p.attn_out_temporal, st.out_temporal, so.temporal, dh,
                    g.attn_out_temporal, nullptr);
    attend_backward(h, ctx.motion, p.attn_out_motion, st.out_motion, so.motion, dh,
                    g.attn_out_motion, nullptr);

    LstmGrads lg = lstm_backward(st.lstm, p, cfg.cell_output_tanh, dh, dc_next, g);
    mask_in_place(lg.dx, st.drop_in);

    const Vec dz_in =
        fusion_backward(st.fuse_in, p.fuse_in_W, cfg.fusion, lg.dx, g.fuse_in_W, g.fuse_in_b);
    SlotGrads si = split_fusion_grad(dz_in, d.embed, d, st.in_temporal.output,
                                     st.in_motion.output, p.imp_in_temporal, p.imp_in_motion,
                                     g.imp_in_temporal, g.imp_in_motion);
    Vec dx = std::move(si.first);
    attend_backward(st.x, ctx.semantic, p.attn_in_semantic, st.in_semantic, si.semantic, dx,
                    g.attn_in_semantic, &dsemantic);
    attend_backward(st.x, ctx.temporal, p.attn_in_temporal, st.in_temporal, si.temporal, dx,
                    g.attn_in_temporal, nullptr);
    attend_backward(st.x, ctx.motion, p.attn_in_motion, st.in_motion, si.motion, dx,
                    g.attn_in_motion, nullptr);
    axpy(1.0, dx, g.embedding.row(st.input));

    dh_next = std::move(lg.dh_prev);
    dc_next = std::move(lg.dc_prev);
  }

  // Mean-pool initialisation: (h0, c0) = LSTM(init_W [mean_s, mean_v, mean_f], 0, 0).
  const LstmGrads lg0 = lstm_backward(trace.init.lstm, p, cfg.cell_output_tanh, dh_next, dc_next, g);
  add_outer(g.init_W, lg0.dx, trace.init.z);
  if (!ctx.semantic.empty()) {
    const Vec dz0 = matvec_t(p.init_W, lg0.dx);
    const double inv = 1.0 / static_cast<double>(ctx.semantic.size());
    for (auto& ds : dsemantic) {
      for (std::size_t k = 0; k < d.embed; ++k) ds[k] += inv * dz0[k];
    }
  }

  for (std::size_t i = 0; i < dsemantic.size(); ++i) {
    axpy(1.0, dsemantic[i], g.embedding.row(ctx.attribute_ids[i]));
  }
}

Gradients backward(const ForwardTrace& trace, std::span<const TokenId> caption,
                   const ModelParams& params) {
  Gradients g = ModelParams::zeros(params.dims);
  backward_accumulate(trace, caption, params, g);
  return g;
}

}  // namespace mfa
