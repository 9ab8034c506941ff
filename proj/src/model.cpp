#include "ocd/model.hpp"

#include <cmath>

#include "ocd/rng.hpp"

namespace ocd {

void ModelConfig::validate() const {
  if (vocab_size < 3) throw Error("model.vocab_size must be >= 3 (content + eos + pad)");
  if (embed_dim < 1) throw Error("model.embed_dim must be >= 1");
  if (hidden_dim < 1) throw Error("model.hidden_dim must be >= 1");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"use_attention", use_attention},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.use_attention = j.value("use_attention", c.use_attention);
  c.seed = j.value("seed", c.seed);
  return c;
}

// --- Params -----------------------------------------------------------------

template <typename T>
Params<T> Params<T>::zeros(const ModelConfig& config) {
  const auto v = static_cast<Eigen::Index>(config.vocab_size);
  const auto e = static_cast<Eigen::Index>(config.embed_dim);
  const auto h = static_cast<Eigen::Index>(config.hidden_dim);
  const auto o = static_cast<Eigen::Index>(config.outputs());
  Params p;
  p.embedding = Matrix<T>::Zero(v, e);
  p.enc_w = Matrix<T>::Zero(3 * h, e);
  p.enc_u = Matrix<T>::Zero(3 * h, h);
  p.enc_b = Matrix<T>::Zero(3 * h, 1);
  p.dec_w = Matrix<T>::Zero(3 * h, e);
  p.dec_u = Matrix<T>::Zero(3 * h, h);
  p.dec_b = Matrix<T>::Zero(3 * h, 1);
  p.att_w = Matrix<T>::Zero(h, h);
  p.out_w = Matrix<T>::Zero(o, h);
  p.out_wc = Matrix<T>::Zero(o, h);
  p.out_b = Matrix<T>::Zero(o, 1);
  return p;
}

template <typename T>
std::vector<Matrix<T>*> Params<T>::tensors() {
  std::vector<Matrix<T>*> out;
  for_each([&](const std::string&, Matrix<T>& m) { out.push_back(&m); });
  return out;
}

template <typename T>
std::vector<const Matrix<T>*> Params<T>::tensors() const {
  std::vector<const Matrix<T>*> out;
  for_each([&](const std::string&, const Matrix<T>& m) { out.push_back(&m); });
  return out;
}

template <typename T>
std::vector<std::string> Params<T>::names() const {
  std::vector<std::string> out;
  for_each([&](const std::string& name, const Matrix<T>&) { out.push_back(name); });
  return out;
}

template <typename T>
bool Params<T>::all_finite() const {
  for (const auto* m : tensors()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

template <typename T>
void Params<T>::set_zero() {
  for (auto* m : tensors()) m->setZero();
}

template <typename T>
Params<T>& Params<T>::operator+=(const Params& other) {
  auto mine = tensors();
  auto theirs = other.tensors();
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += *theirs[i];
  return *this;
}

namespace {

template <typename T>
void xavier_fill(Eigen::Block<Matrix<T>> block, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(block.rows() + block.cols()));
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
  }
}

template <typename T>
void xavier_fill(Matrix<T>& m, Rng& rng) {
  xavier_fill<T>(m.block(0, 0, m.rows(), m.cols()), rng);
}

template <typename T>
void xavier_gates(Matrix<T>& m, Rng& rng) {
  const auto h = m.rows() / 3;
  for (int g = 0; g < 3; ++g) xavier_fill<T>(m.block(g * h, 0, h, m.cols()), rng);
}

}  // namespace

template <typename T>
Params<T> init_params(const ModelConfig& config) {
  config.validate();
  auto p = Params<T>::zeros(config);
  Rng rng(derive_seed(config.seed, "init"));
  xavier_fill(p.embedding, rng);
  xavier_gates(p.enc_w, rng);
  xavier_gates(p.enc_u, rng);
  xavier_gates(p.dec_w, rng);
  xavier_gates(p.dec_u, rng);
  xavier_fill(p.att_w, rng);
  xavier_fill(p.out_w, rng);
  xavier_fill(p.out_wc, rng);
  return p;
}

// --- GRU cell ---------------------------------------------------------------

namespace {

template <typename T>
struct GruCache {
  Vector<T> x;
  Vector<T> h;
  Vector<T> z;
  Vector<T> r;
  Vector<T> n;
  Vector<T> rh;
};

template <typename T>
Vector<T> sigmoid(const Vector<T>& v) {
  return (T(1) / (T(1) + (-v.array()).exp())).matrix();
}

template <typename T>
Vector<T> gru_forward(const Matrix<T>& w, const Matrix<T>& u, const Matrix<T>& b, const Vector<T>& x,
                      const Vector<T>& h, GruCache<T>* cache) {
  const auto hd = h.size();
  const Vector<T> wx = w * x + b.col(0);
  const Vector<T> zr = wx.head(2 * hd) + u.topRows(2 * hd) * h;
  Vector<T> z = sigmoid<T>(zr.head(hd));
  Vector<T> r = sigmoid<T>(zr.tail(hd));
  Vector<T> rh = r.cwiseProduct(h);
  Vector<T> n = (wx.tail(hd) + u.bottomRows(hd) * rh).array().tanh().matrix();
  Vector<T> out = (T(1) - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
  if (cache) *cache = {x, h, std::move(z), std::move(r), std::move(n), std::move(rh)};
  return out;
}

// Backpropagates d(out) through one cell. Writes dx and dh_prev, accumulates
// weight gradients.
template <typename T>
void gru_backward(const Matrix<T>& w, const Matrix<T>& u, const GruCache<T>& c, const Vector<T>& dout,
                  Matrix<T>& dw, Matrix<T>& du, Matrix<T>& db, Vector<T>& dx, Vector<T>& dh) {
  const auto hd = c.h.size();
  const Vector<T> dn = dout.cwiseProduct((T(1) - c.z.array()).matrix());
  const Vector<T> dz = dout.cwiseProduct(c.h - c.n);
  dh = dout.cwiseProduct(c.z);

  Vector<T> da(3 * hd);
  da.tail(hd) = dn.cwiseProduct((T(1) - c.n.array().square()).matrix());
  const Vector<T> drh = u.bottomRows(hd).transpose() * da.tail(hd);
  const Vector<T> dr = drh.cwiseProduct(c.h);
  dh += drh.cwiseProduct(c.r);
  da.head(hd) = dz.cwiseProduct((c.z.array() * (T(1) - c.z.array())).matrix());
  da.segment(hd, hd) = dr.cwiseProduct((c.r.array() * (T(1) - c.r.array())).matrix());

  dw.noalias() += da * c.x.transpose();
  db.col(0) += da;
  du.topRows(2 * hd).noalias() += da.head(2 * hd) * c.h.transpose();
  du.bottomRows(hd).noalias() += da.tail(hd) * c.rh.transpose();
  dh.noalias() += u.topRows(2 * hd).transpose() * da.head(2 * hd);
  dx.noalias() = w.transpose() * da;
}

template <typename T>
std::vector<double> log_softmax(const Vector<T>& logits) {
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  double top = -INFINITY;
  for (Eigen::Index i = 0; i < logits.size(); ++i) top = std::max(top, static_cast<double>(logits[i]));
  double z = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) z += std::exp(static_cast<double>(logits[i]) - top);
  const double lz = top + std::log(z);
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(logits[i]) - lz;
  return out;
}

template <typename T>
struct AttentionCache {
  Vector<T> query;
  Vector<T> alpha;
  Vector<T> context;
};

template <typename T>
Vector<T> output_logits(const Params<T>& p, const ModelConfig& cfg, const Vector<T>& state, const Encoding<T>& enc,
                        AttentionCache<T>* cache) {
  Vector<T> logits = p.out_w * state + p.out_b.col(0);
  if (cfg.use_attention) {
    AttentionCache<T> a;
    a.query = p.att_w * state;
    Vector<T> scores = enc.states.transpose() * a.query;
    scores.array() -= scores.maxCoeff();
    a.alpha = scores.array().exp().matrix();
    a.alpha /= a.alpha.sum();
    a.context = enc.states * a.alpha;
    logits.noalias() += p.out_wc * a.context;
    if (cache) *cache = std::move(a);
  }
  return logits;
}

}  // namespace

// --- Seq2Seq ----------------------------------------------------------------

template <typename T>
Seq2Seq<T>::Seq2Seq(ModelConfig config, Params<T> params) : config_(config), params_(std::move(params)) {
  config_.validate();
}

template <typename T>
Encoding<T> Seq2Seq<T>::encode(std::span<const Token> x) const {
  if (x.empty()) throw Error("encode: empty input sequence");
  const auto hd = static_cast<Eigen::Index>(config_.hidden_dim);
  Encoding<T> enc;
  enc.states.resize(hd, static_cast<Eigen::Index>(x.size()));
  Vector<T> h = Vector<T>::Zero(hd);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < 0 || x[k] >= config_.eos()) throw Error("encode: invalid input token " + std::to_string(x[k]));
    const Vector<T> e = params_.embedding.row(x[k]).transpose();
    h = gru_forward<T>(params_.enc_w, params_.enc_u, params_.enc_b, e, h, nullptr);
    enc.states.col(static_cast<Eigen::Index>(k)) = h;
  }
  enc.summary = h;
  return enc;
}

template <typename T>
DecodeStep<T> Seq2Seq<T>::decode_step(const Vector<T>& state, Token prev, const Encoding<T>& enc) const {
  if (prev < 0 || (prev >= config_.eos() && prev != config_.bos())) {
    throw Error("decode_step: invalid previous token " + std::to_string(prev));
  }
  const Vector<T> e = params_.embedding.row(prev).transpose();
  DecodeStep<T> out;
  out.state = gru_forward<T>(params_.dec_w, params_.dec_u, params_.dec_b, e, state, nullptr);
  out.logprobs = log_softmax<T>(output_logits<T>(params_, config_, out.state, enc, nullptr));
  return out;
}

// --- ForwardPass ------------------------------------------------------------

template <typename T>
struct ForwardPass<T>::Impl {
  struct DecoderRecord {
    Token prev;
    GruCache<T> cell;
    Vector<T> state;
    AttentionCache<T> attention;
    std::vector<double> logprobs;
  };

  const Seq2Seq<T>* model;
  Sequence x;
  Encoding<T> enc;
  std::vector<GruCache<T>> enc_cells;
  std::vector<DecoderRecord> dec;
  Vector<T> state;
};

template <typename T>
ForwardPass<T>::ForwardPass(const Seq2Seq<T>& model, std::span<const Token> x) : impl_(std::make_unique<Impl>()) {
  if (x.empty()) throw Error("encode: empty input sequence");
  const auto& cfg = model.config();
  const auto& p = model.params();
  const auto hd = static_cast<Eigen::Index>(cfg.hidden_dim);
  impl_->model = &model;
  impl_->x.assign(x.begin(), x.end());
  impl_->enc.states.resize(hd, static_cast<Eigen::Index>(x.size()));
  impl_->enc_cells.resize(x.size());
  Vector<T> h = Vector<T>::Zero(hd);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < 0 || x[k] >= cfg.eos()) throw Error("encode: invalid input token " + std::to_string(x[k]));
    const Vector<T> e = p.embedding.row(x[k]).transpose();
    h = gru_forward<T>(p.enc_w, p.enc_u, p.enc_b, e, h, &impl_->enc_cells[k]);
    impl_->enc.states.col(static_cast<Eigen::Index>(k)) = h;
  }
  impl_->enc.summary = h;
  impl_->state = h;
}

template <typename T>
ForwardPass<T>::~ForwardPass() = default;
template <typename T>
ForwardPass<T>::ForwardPass(ForwardPass&&) noexcept = default;
template <typename T>
ForwardPass<T>& ForwardPass<T>::operator=(ForwardPass&&) noexcept = default;

template <typename T>
const std::vector<double>& ForwardPass<T>::step(Token prev) {
  const auto& cfg = impl_->model->config();
  const auto& p = impl_->model->params();
  if (prev < 0 || (prev >= cfg.eos() && prev != cfg.bos())) {
    throw Error("decode_step: invalid previous token " + std::to_string(prev));
  }
  typename Impl::DecoderRecord rec;
  rec.prev = prev;
  const Vector<T> e = p.embedding.row(prev).transpose();
  rec.state = gru_forward<T>(p.dec_w, p.dec_u, p.dec_b, e, impl_->state, &rec.cell);
  rec.logprobs = log_softmax<T>(output_logits<T>(p, cfg, rec.state, impl_->enc, &rec.attention));
  impl_->state = rec.state;
  impl_->dec.push_back(std::move(rec));
  return impl_->dec.back().logprobs;
}

template <typename T>
std::size_t ForwardPass<T>::steps() const {
  return impl_->dec.size();
}

template <typename T>
const ModelConfig& ForwardPass<T>::config() const {
  return impl_->model->config();
}

template <typename T>
std::vector<std::vector<double>> ForwardPass<T>::logprobs() const {
  std::vector<std::vector<double>> out;
  out.reserve(impl_->dec.size());
  for (const auto& r : impl_->dec) out.push_back(r.logprobs);
  return out;
}

template <typename T>
void ForwardPass<T>::backward(std::span<const std::vector<double>> dlogits, Params<T>& g) const {
  const auto& cfg = impl_->model->config();
  const auto& p = impl_->model->params();
  const auto& enc = impl_->enc;
  const auto hd = static_cast<Eigen::Index>(cfg.hidden_dim);
  if (dlogits.size() > impl_->dec.size()) throw Error("backward: more gradient steps than recorded steps");

  Matrix<T> dstates = Matrix<T>::Zero(hd, enc.states.cols());
  Vector<T> carry = Vector<T>::Zero(hd);
  Vector<T> dx;
  Vector<T> dh;
  for (std::size_t t = dlogits.size(); t-- > 0;) {
    const auto& rec = impl_->dec[t];
    Vector<T> gl(static_cast<Eigen::Index>(dlogits[t].size()));
    for (std::size_t a = 0; a < dlogits[t].size(); ++a) gl[static_cast<Eigen::Index>(a)] = static_cast<T>(dlogits[t][a]);

    Vector<T> ds = carry;
    g.out_w.noalias() += gl * rec.state.transpose();
    g.out_b.col(0) += gl;
    ds.noalias() += p.out_w.transpose() * gl;
    if (cfg.use_attention) {
      const auto& at = rec.attention;
      g.out_wc.noalias() += gl * at.context.transpose();
      const Vector<T> dctx = p.out_wc.transpose() * gl;
      const Vector<T> dalpha = enc.states.transpose() * dctx;
      const Vector<T> dscore = at.alpha.cwiseProduct((dalpha.array() - at.alpha.dot(dalpha)).matrix());
      const Vector<T> dq = enc.states * dscore;
      dstates.noalias() += at.query * dscore.transpose() + dctx * at.alpha.transpose();
      g.att_w.noalias() += dq * rec.state.transpose();
      ds.noalias() += p.att_w.transpose() * dq;
    }
    gru_backward<T>(p.dec_w, p.dec_u, rec.cell, ds, g.dec_w, g.dec_u, g.dec_b, dx, dh);
    g.embedding.row(rec.prev) += dx.transpose();
    carry = dh;
  }

  // The decoder's initial state is the encoder summary (last state).
  dstates.col(dstates.cols() - 1) += carry;
  carry.setZero();
  for (std::size_t k = impl_->x.size(); k-- > 0;) {
    const Vector<T> dout = dstates.col(static_cast<Eigen::Index>(k)) + carry;
    gru_backward<T>(p.enc_w, p.enc_u, impl_->enc_cells[k], dout, g.enc_w, g.enc_u, g.enc_b, dx, dh);
    g.embedding.row(impl_->x[k]) += dx.transpose();
    carry = dh;
  }
}

template <typename T>
Params<T> gradients(const ForwardPass<T>& pass, std::span<const std::vector<double>> dlogits,
                    const ModelConfig& config) {
  auto g = Params<T>::zeros(config);
  pass.backward(dlogits, g);
  return g;
}

// --- Adam -------------------------------------------------------------------

template <typename T>
double adam_step(Params<T>& params, const Params<T>& grads, OptimizerState<T>& state, const AdamOptions& options) {
  auto ps = params.tensors();
  auto gs = grads.tensors();
  auto ms = state.m.tensors();
  auto vs = state.v.tensors();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (gs[i]->rows() != ps[i]->rows() || gs[i]->cols() != ps[i]->cols() || ms[i]->rows() != ps[i]->rows() ||
        ms[i]->cols() != ps[i]->cols() || vs[i]->rows() != ps[i]->rows() || vs[i]->cols() != ps[i]->cols()) {
      throw Error("adam_step: shape mismatch in tensor " + params.names()[i]);
    }
  }

  double sq = 0.0;
  for (const auto* g : gs) sq += g->template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  const double scale = norm > options.clip_norm ? options.clip_norm / norm : 1.0;

  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<T>(options.beta1);
  const auto b2 = static_cast<T>(options.beta2);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto g = (gs[i]->array() * static_cast<T>(scale)).eval();
    ms[i]->array() = b1 * ms[i]->array() + (T(1) - b1) * g;
    vs[i]->array() = b2 * vs[i]->array() + (T(1) - b2) * g.square();
    ps[i]->array() -= static_cast<T>(options.lr) * (ms[i]->array() / static_cast<T>(c1)) /
                      ((vs[i]->array() / static_cast<T>(c2)).sqrt() + static_cast<T>(options.eps));
  }
  return norm;
}

template struct Params<float>;
template struct Params<double>;
template Params<float> init_params<float>(const ModelConfig&);
template Params<double> init_params<double>(const ModelConfig&);
template class Seq2Seq<float>;
template class Seq2Seq<double>;
template class ForwardPass<float>;
template class ForwardPass<double>;
template Params<float> gradients<float>(const ForwardPass<float>&, std::span<const std::vector<double>>,
                                        const ModelConfig&);
template Params<double> gradients<double>(const ForwardPass<double>&, std::span<const std::vector<double>>,
                                          const ModelConfig&);
template double adam_step<float>(Params<float>&, const Params<float>&, OptimizerState<float>&, const AdamOptions&);
template double adam_step<double>(Params<double>&, const Params<double>&, OptimizerState<double>&,
                                  const AdamOptions&);

}  // namespace ocd
