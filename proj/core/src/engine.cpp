#include "qdopfo/engine.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "qdopfo/errors.hpp"

namespace qdopfo {

double alpha_from_schedule(double kappa2, double gamma, std::uint64_t T) {
  if (!(kappa2 > 0.0)) throw ConfigError("step schedule: kappa2 must be > 0");
  const double tg = std::pow(static_cast<double>(T), gamma);
  if (kappa2 > tg)
    throw ConfigError("step schedule: kappa2 <= T^gamma is required");
  return kappa2 / tg;
}

std::uint64_t Trace::total_bits() const {
  std::uint64_t sum = 0;
  for (const std::uint64_t b : bits) sum += b;
  return sum;
}

namespace {

bool vectors_equal(const std::vector<Eigen::VectorXd>& a,
                   const std::vector<Eigen::VectorXd>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) return false;
    if (std::memcmp(a[k].data(), b[k].data(),
                    sizeof(double) * a[k].size()) != 0)
      return false;
  }
  return true;
}

template <typename T>
bool pod_equal(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), sizeof(T) * a.size()) == 0;
}

}  // namespace

bool traces_bit_identical(const Trace& a, const Trace& b) {
  return a.n == b.n && a.d == b.d && a.T == b.T &&
         pod_equal(a.own_loss, b.own_loss) &&
         pod_equal(a.global_loss, b.global_loss) && pod_equal(a.bits, b.bits) &&
         pod_equal(a.fallback, b.fallback) &&
         pod_equal(a.state_err_sq, b.state_err_sq) &&
         pod_equal(a.consensus_err, b.consensus_err) &&
         pod_equal(a.tracking_err, b.tracking_err) &&
         vectors_equal(a.x_avg, b.x_avg) && vectors_equal(a.v_avg, b.v_avg) &&
         vectors_equal(a.e_mean, b.e_mean) &&
         a.init_dispersion == b.init_dispersion &&
         a.init_state_norm == b.init_state_norm &&
         a.init_grad_norm == b.init_grad_norm &&
         vectors_equal(a.decisions, b.decisions) &&
         vectors_equal(a.consensus, b.consensus) &&
         vectors_equal(a.gbar, b.gbar) && vectors_equal(a.qgrad, b.qgrad);
}

Engine::Engine(const RunConfig& config) : cfg_(config) {
  if (!cfg_.problem || !cfg_.graphs || !cfg_.set)
    throw ConfigError("engine: problem, graphs and set are required");
  if (!(cfg_.alpha > 0.0 && cfg_.alpha <= 1.0))
    throw ConfigError("engine: parameter 0 < α ≤ 1 is required, got alpha=" +
                      std::to_string(cfg_.alpha));
  n_ = cfg_.problem->n();
  d_ = cfg_.problem->d();
  T_ = cfg_.problem->horizon();
  cfg_.set->validate();
  if (cfg_.set->dim != d_) throw ConfigError("engine: set dimension mismatch");
  if (cfg_.graphs->n() != n_) throw ConfigError("engine: graph agent count mismatch");
  if (cfg_.graphs->horizon() < T_)
    throw ConfigError("engine: graph sequence shorter than the horizon");
  cfg_.state_quantizer.validate();
  cfg_.grad_quantizer.validate();

  x_.assign(n_, Eigen::VectorXd::Zero(d_));
  if (!cfg_.initial_decisions.empty()) {
    if (static_cast<int>(cfg_.initial_decisions.size()) != n_)
      throw ConfigError("engine: need one initial decision per agent");
    for (int i = 0; i < n_; ++i) {
      if (!contains(*cfg_.set, cfg_.initial_decisions[i]))
        throw ConfigError("engine: initial decision outside the feasible set");
      x_[i] = cfg_.initial_decisions[i];
    }
  }
  s_.assign(n_, Eigen::VectorXd::Zero(d_));
  last_qgrad_.assign(n_, Eigen::VectorXd::Zero(d_));

  feats_fixed_ = cfg_.problem->mode() != OnlineProblem::Mode::Explicit;
  feats_.resize(n_);
  for (int i = 0; i < n_; ++i) feats_[i] = cfg_.problem->features(i + 1, 1);

  trace_.n = n_;
  trace_.d = d_;
  trace_.T = T_;
  const std::size_t cells = static_cast<std::size_t>(T_) * n_;
  trace_.own_loss.resize(cells);
  trace_.global_loss.resize(cells);
  trace_.bits.resize(cells);
  trace_.fallback.resize(cells);
  trace_.state_err_sq.resize(cells);
  trace_.consensus_err.resize(T_);
  trace_.tracking_err.resize(T_);
  trace_.x_avg.resize(T_);
  trace_.v_avg.resize(T_);
  trace_.e_mean.resize(T_);
  if (cfg_.record_decisions) {
    trace_.decisions.resize(cells);
    trace_.consensus.resize(cells);
  }
  if (cfg_.record_tracking) {
    trace_.gbar.resize(cells);
    trace_.qgrad.resize(cells);
  }
}

void Engine::step() {
  if (done()) throw RuntimeFailure("engine: horizon exhausted");
  const std::uint64_t t = t_;
  const Eigen::MatrixXd W = cfg_.graphs->weight_matrix(t);
  if (!feats_fixed_)
    for (int i = 0; i < n_; ++i) feats_[i] = cfg_.problem->features(i + 1, t);
  Eigen::VectorXd labels(n_);
  for (int i = 0; i < n_; ++i) labels[i] = cfg_.problem->label(i + 1, t);

  // quantize all states; an infeasible quantized state is replaced by the
  // exact state and charged full precision
  std::vector<Eigen::VectorXd> m(n_);
  for (int i = 0; i < n_; ++i) {
    CounterRng rng = derive_stream(cfg_.seed, StreamTag::StateQuant, i + 1, t);
    QuantizedMessage msg = quantize(cfg_.state_quantizer, x_[i], t, rng);
    std::uint64_t state_bits = msg.bits;
    bool fell_back = false;
    if (!contains(*cfg_.set, msg.payload)) {
      msg.payload = x_[i];
      state_bits = exact_message_bits(d_);
      fell_back = true;
    }
    m[i] = std::move(msg.payload);
    const std::size_t cell = trace_.at(t, i + 1);
    trace_.fallback[cell] = fell_back ? 1 : 0;
    trace_.bits[cell] = state_bits;
    trace_.state_err_sq[cell] = (m[i] - x_[i]).squaredNorm();
  }

  // mix all states
  std::vector<Eigen::VectorXd> xhat(n_);
  for (int i = 0; i < n_; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d_);
    for (int j = 0; j < n_; ++j) acc += W(i, j) * m[j];
    xhat[i] = std::move(acc);
  }

  // local gradients at the mixed states, quantized
  std::vector<Eigen::VectorXd> qg(n_);
  for (int i = 0; i < n_; ++i) {
    const double r = feats_[i].dot(xhat[i]) - labels[i];
    Eigen::VectorXd grad = feats_[i] * r + 2.0 * cfg_.problem->rho() * xhat[i];
    if (!grad.allFinite())
      throw RuntimeFailure("engine: non-finite gradient at agent " +
                           std::to_string(i + 1) + ", round " + std::to_string(t));
    if (t == 1) trace_.init_grad_norm += grad.norm();
    CounterRng rng = derive_stream(cfg_.seed, StreamTag::GradQuant, i + 1, t);
    QuantizedMessage msg = quantize(cfg_.grad_quantizer, grad, t, rng);
    trace_.bits[trace_.at(t, i + 1)] += msg.bits;
    qg[i] = std::move(msg.payload);
  }

  // gradient tracking: correct by the change of the quantized gradient
  std::vector<Eigen::VectorXd> gbar(n_);
  for (int i = 0; i < n_; ++i) {
    if (t == 1)
      gbar[i] = qg[i];
    else
      gbar[i] = s_[i] + qg[i] - last_qgrad_[i];
  }
  for (int i = 0; i < n_; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d_);
    for (int j = 0; j < n_; ++j) acc += W(i, j) * gbar[j];
    s_[i] = std::move(acc);
  }

  // record the round before updating the decisions
  Eigen::VectorXd x_avg = Eigen::VectorXd::Zero(d_);
  for (int i = 0; i < n_; ++i) x_avg += x_[i];
  x_avg /= static_cast<double>(n_);
  Eigen::VectorXd e_mean = Eigen::VectorXd::Zero(d_);
  for (int i = 0; i < n_; ++i) e_mean += m[i] - x_[i];
  e_mean /= static_cast<double>(n_);

  double consensus_err = 0.0;
  for (int i = 0; i < n_; ++i) consensus_err += (xhat[i] - x_avg).norm();

  Eigen::VectorXd gsum = Eigen::VectorXd::Zero(d_);
  for (int k = 0; k < n_; ++k) {
    const double rk = feats_[k].dot(x_avg) - labels[k];
    gsum += feats_[k] * rk;
  }
  gsum += 2.0 * cfg_.problem->rho() * n_ * x_avg;
  const Eigen::VectorXd mean_grad = gsum / static_cast<double>(n_);
  double tracking_err = 0.0;
  for (int i = 0; i < n_; ++i) tracking_err += (s_[i] - mean_grad).norm();

  for (int i = 0; i < n_; ++i) {
    const std::size_t cell = trace_.at(t, i + 1);
    const double ri = feats_[i].dot(x_[i]) - labels[i];
    trace_.own_loss[cell] =
        0.5 * ri * ri + cfg_.problem->rho() * x_[i].squaredNorm();
    double global = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double rk = feats_[k].dot(x_[i]) - labels[k];
      global += 0.5 * rk * rk;
    }
    global += cfg_.problem->rho() * n_ * x_[i].squaredNorm();
    trace_.global_loss[cell] = global;
    if (cfg_.record_decisions) {
      trace_.decisions[cell] = x_[i];
      trace_.consensus[cell] = xhat[i];
    }
    if (cfg_.record_tracking) {
      trace_.gbar[cell] = gbar[i];
      trace_.qgrad[cell] = qg[i];
    }
  }
  trace_.consensus_err[t - 1] = consensus_err;
  trace_.tracking_err[t - 1] = tracking_err;
  trace_.x_avg[t - 1] = x_avg;
  trace_.e_mean[t - 1] = e_mean;
  if (t == 1) {
    for (int i = 0; i < n_; ++i) {
      trace_.init_dispersion += (x_[i] - x_avg).norm();
      trace_.init_state_norm += x_[i].norm();
    }
  }

  // projection-free update
  Eigen::VectorXd v_avg = Eigen::VectorXd::Zero(d_);
  for (int i = 0; i < n_; ++i) {
    const Eigen::VectorXd v = lmo(*cfg_.set, s_[i]);
    v_avg += v;
    x_[i] = xhat[i] + cfg_.alpha * (v - xhat[i]);
    last_qgrad_[i] = qg[i];
  }
  trace_.v_avg[t - 1] = v_avg / static_cast<double>(n_);

  ++t_;
}

Trace run(const RunConfig& config) {
  Engine engine(config);
  while (!engine.done()) engine.step();
  return engine.take_trace();
}

}  // namespace qdopfo
