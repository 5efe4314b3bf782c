// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/lgm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lgmsep/parallel.hpp"

namespace lgmsep {

namespace {

constexpr double kVarFloorRel = 1e-8;  // v floor = rel * per-band mean power

double pearson(const double* a, const double* b, int n) {
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa < 1e-30 || sbb < 1e-30) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Covariance of component m at frame (l, k) under `params`; zero when the
// referenced variance frame lies before the start of the utterance.
SmallMat component_cov(const ScmParams& p, int m, int l, int k) {
  const int ns = p.num_sources;
  const int lr = p.reverb_taps;
  if (m < ns) return p.v_at(m, l, k) * p.R_at(m, k);
  if (m < ns * (1 + lr)) {
    const int i = (m - ns) / lr;
    const int d = (m - ns) % lr;
    const int src = l - (d + 1);
    if (src < 0) return SmallMat::Zero(p.num_mics, p.num_mics);
    return p.v_at(i, src, k) * p.H_at(i, d, k);
  }
  return p.Rn_at(k);
}

void moments_from_inverse(const SmallVec& x, const ScmParams& p, int l, int k,
                          const SmallMat& s_inv, ComponentMoments* out) {
  const int nc = p.num_components();
  out->second_moment.resize(nc);
  out->wiener.resize(nc);
  for (int m = 0; m < nc; ++m) {
    const SmallMat c = component_cov(p, m, l, k);
    SmallMat w = c * s_inv;
    const SmallVec mu = w * x;
    const SmallMat v = c - w * c;
    out->second_moment[m] = hermitize(v + mu * mu.adjoint());
    out->wiener[m] = std::move(w);
  }
}

}  // namespace

void ScmParams::resize(int sources, int frames, int bins, int mics,
                       int taps) {
  if (sources < 1 || frames < 1 || bins < 1 || mics < 1 || taps < 0)
    throw UsageError("ScmParams: invalid geometry");
  if (mics > kMaxMics) throw UsageError("ScmParams: too many channels");
  num_sources = sources;
  num_frames = frames;
  num_bins = bins;
  num_mics = mics;
  reverb_taps = taps;
  v.assign(static_cast<size_t>(sources) * bins * frames, 0.0);
  R.assign(static_cast<size_t>(sources) * bins * mics * mics, cd(0, 0));
  H.assign(static_cast<size_t>(sources) * taps * bins * mics * mics, cd(0, 0));
  R_n.assign(static_cast<size_t>(bins) * mics * mics, cd(0, 0));
}

void ScmParams::check() const {
  if (v.size() != static_cast<size_t>(num_sources) * num_bins * num_frames ||
      R.size() !=
          static_cast<size_t>(num_sources) * num_bins * num_mics * num_mics ||
      H.size() != static_cast<size_t>(num_sources) * reverb_taps * num_bins *
                      num_mics * num_mics ||
      R_n.size() != static_cast<size_t>(num_bins) * num_mics * num_mics)
    throw UsageError("ScmParams: storage does not match geometry");
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw NumericError("ScmParams: variance must be finite and >= 0");
}

void GaussianPosterior::resize(int sources, int frames, int bins, int mics) {
  num_sources = sources;
  num_frames = frames;
  num_bins = bins;
  num_mics = mics;
  mu.assign(static_cast<size_t>(sources) * bins * frames * mics, cd(0, 0));
  V.assign(static_cast<size_t>(sources) * bins * frames * mics * mics,
           cd(0, 0));
}

GaussianPosterior GaussianPosterior::slice_frames(int begin, int count) const {
  if (begin < 0 || count < 1 || begin + count > num_frames)
    throw UsageError("GaussianPosterior::slice_frames: range out of bounds");
  GaussianPosterior out;
  out.resize(num_sources, count, num_bins, num_mics);
  for (int i = 0; i < num_sources; ++i)
    for (int k = 0; k < num_bins; ++k)
      for (int l = 0; l < count; ++l) {
        out.mu_at(i, l, k) = mu_at(i, begin + l, k);
        out.V_at(i, l, k) = V_at(i, begin + l, k);
      }
  return out;
}

SmallMat assemble_scm(const ScmParams& params, int l, int k) {
  SmallMat s = SmallMat(params.Rn_at(k));
  for (int i = 0; i < params.num_sources; ++i) {
    s.noalias() += params.v_at(i, l, k) * params.R_at(i, k);
    for (int d = 0; d < params.reverb_taps; ++d) {
      const int src = l - (d + 1);
      if (src < 0) continue;
      s.noalias() += params.v_at(i, src, k) * params.H_at(i, d, k);
    }
  }
  return hermitize(s);
}

void mwf_posterior(const SmallVec& x, const ScmParams& params, int i, int l,
                   int k, SmallVec* mu_out, SmallMat* V_out) {
  const int nm = params.num_mics;
  const SmallMat b = params.v_at(i, l, k) * params.R_at(i, k);
  const SmallMat s = assemble_scm(params, l, k);
  if (real_trace(s) <= 0.0) {
    // fully silent model at this frame: conditioning is vacuous
    if (mu_out) *mu_out = SmallVec::Zero(nm);
    if (V_out) *V_out = b;
    return;
  }
  const SmallMat w = b * wiener_inverse(s).inv;
  if (mu_out) *mu_out = w * x;
  if (V_out) *V_out = hermitize(b - w * b);
}

ComponentMoments e_step_moments(const SmallVec& x, const ScmParams& params,
                                int l, int k) {
  ComponentMoments out;
  const SmallMat s = assemble_scm(params, l, k);
  const int nm = params.num_mics;
  if (real_trace(s) <= 0.0) {
    const int nc = params.num_components();
    out.second_moment.assign(nc, SmallMat::Zero(nm, nm));
    out.wiener.assign(nc, SmallMat::Zero(nm, nm));
    return out;
  }
  moments_from_inverse(x, params, l, k, wiener_inverse(s).inv, &out);
  return out;
}

ScmParams em_iterate(const Spectrogram& spec, const ScmParams& params) {
  params.check();
  if (params.num_frames != spec.num_frames ||
      params.num_bins != spec.num_bins || params.num_mics != spec.num_channels)
    throw UsageError("em_iterate: parameter geometry does not match input");

  const int ns = params.num_sources;
  const int lr = params.reverb_taps;
  const int nm = params.num_mics;
  const int num_l = params.num_frames;

  ScmParams next;
  next.resize(ns, num_l, params.num_bins, nm, lr);
  const std::vector<double> band_power_all = spec.mean_band_power();

  parallel_for(params.num_bins, [&](int k) {
    const double band_power = band_power_all[k];
    if (band_power <= 0.0) {
      // silent band: nothing to estimate, keep the previous parameters
      for (int i = 0; i < ns; ++i) {
        next.R_at(i, k) = params.R_at(i, k);
        for (int d = 0; d < lr; ++d) next.H_at(i, d, k) = params.H_at(i, d, k);
        for (int l = 0; l < num_l; ++l)
          next.v_at(i, l, k) = params.v_at(i, l, k);
      }
      next.Rn_at(k) = params.Rn_at(k);
      return;
    }
    const double v_floor = kVarFloorRel * band_power;

    std::vector<SmallMat> r_inv(ns);
    for (int i = 0; i < ns; ++i)
      r_inv[i] = wiener_inverse(SmallMat(params.R_at(i, k))).inv;

    std::vector<SmallMat> r_acc(ns, SmallMat::Zero(nm, nm));
    std::vector<SmallMat> h_acc(static_cast<size_t>(ns) * lr,
                                SmallMat::Zero(nm, nm));
    SmallMat rn_acc = SmallMat::Zero(nm, nm);
    ComponentMoments mom;

    for (int l = 0; l < num_l; ++l) {
      const SmallVec x = spec.bin_vec(l, k);
      const SmallMat s = assemble_scm(params, l, k);
      if (real_trace(s) <= 0.0) {
        for (int i = 0; i < ns; ++i) next.v_at(i, l, k) = v_floor;
        continue;
      }
      moments_from_inverse(x, params, l, k, wiener_inverse(s).inv, &mom);

      for (int i = 0; i < ns; ++i) {
        const SmallMat& c_dir = mom.second_moment[component_direct(i)];
        const double v_new = std::max(
            v_floor, (r_inv[i] * c_dir).trace().real() / nm);
        next.v_at(i, l, k) = v_new;
        r_acc[i].noalias() += c_dir / v_new;
        for (int d = 0; d < lr; ++d) {
          const int src = l - (d + 1);
          if (src < 0) continue;
          h_acc[static_cast<size_t>(i) * lr + d].noalias() +=
              mom.second_moment[component_reverb(ns, lr, i, d)] /
              next.v_at(i, src, k);
        }
      }
      rn_acc.noalias() += mom.second_moment[component_noise(ns, lr)];
    }

    for (int i = 0; i < ns; ++i) {
      const SmallMat mean_r = hermitize(r_acc[i] / num_l);
      next.R_at(i, k) =
          eig_floor(mean_r, kEigFloorRel * real_trace(mean_r) / nm);
      for (int d = 0; d < lr; ++d) {
        const int count = num_l - (d + 1);
        if (count < 1) {
          next.H_at(i, d, k) = params.H_at(i, d, k);
          continue;
        }
        const SmallMat mean_h =
            hermitize(h_acc[static_cast<size_t>(i) * lr + d] / count);
        next.H_at(i, d, k) =
            eig_floor(mean_h, kEigFloorRel * real_trace(mean_h) / nm);
      }
    }
    const SmallMat mean_rn = hermitize(rn_acc / num_l);
    next.Rn_at(k) =
        eig_floor(mean_rn, kEigFloorRel * real_trace(mean_rn) / nm);
  });
  return next;
}

double log_likelihood(const Spectrogram& spec, const ScmParams& params) {
  if (params.num_frames != spec.num_frames ||
      params.num_bins != spec.num_bins || params.num_mics != spec.num_channels)
    throw UsageError("log_likelihood: parameter geometry does not match");
  const int nm = params.num_mics;
  std::vector<double> partial(params.num_bins, 0.0);
  parallel_for(params.num_bins, [&](int k) {
    double acc = 0.0;
    for (int l = 0; l < params.num_frames; ++l) {
      const SmallMat s = assemble_scm(params, l, k);
      if (real_trace(s) <= 0.0) continue;  // silent-band convention
      SmallRealVec lam;
      eig_hermitian(s, &lam, nullptr);
      double logdet = 0.0;
      for (int j = 0; j < lam.size(); ++j)
        logdet += std::log(std::max(lam(j), 1e-300));
      const SmallVec x = spec.bin_vec(l, k);
      const double quad =
          (x.adjoint() * wiener_inverse(s).inv * x)(0, 0).real();
      acc += -nm * std::log(kPi) - logdet - quad;
    }
    partial[k] = acc;
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

PermutationMap solve_permutation(const ScmParams& params) {
  const int ns = params.num_sources;
  const int num_k = params.num_bins;
  const int num_l = params.num_frames;

  PermutationMap map;
  map.perm.assign(num_k, std::vector<int>(ns));
  for (int k = 0; k < num_k; ++k)
    std::iota(map.perm[k].begin(), map.perm[k].end(), 0);
  if (ns < 2) return map;

  // normalized per-source variance envelopes and per-band total variance
  std::vector<double> env(static_cast<size_t>(ns) * num_k * num_l);
  std::vector<double> band_total(num_k, 0.0);
  for (int i = 0; i < ns; ++i)
    for (int k = 0; k < num_k; ++k) {
      double sum = 0.0;
      for (int l = 0; l < num_l; ++l) sum += params.v_at(i, l, k);
      band_total[k] += sum;
      double* e = env.data() + (static_cast<size_t>(i) * num_k + k) * num_l;
      if (sum <= 0.0)
        std::fill(e, e + num_l, 1.0 / num_l);
      else
        for (int l = 0; l < num_l; ++l) e[l] = params.v_at(i, l, k) / sum;
    }

  std::vector<int> order(num_k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return band_total[a] > band_total[b];
  });

  std::vector<std::vector<double>> centroid(ns,
                                            std::vector<double>(num_l, 0.0));
  std::vector<int> ident(ns);
  std::iota(ident.begin(), ident.end(), 0);
  int visited = 0;
  for (int k : order) {
    std::vector<int> best = ident;
    if (visited > 0) {
      double best_score = -1e300;
      std::vector<int> sigma = ident;
      do {
        double score = 0.0;
        for (int i = 0; i < ns; ++i)
          score += pearson(
              env.data() +
                  (static_cast<size_t>(sigma[i]) * num_k + k) * num_l,
              centroid[i].data(), num_l);
        if (score > best_score) {  // strict: lexicographically first wins ties
          best_score = score;
          best = sigma;
        }
      } while (std::next_permutation(sigma.begin(), sigma.end()));
    }
    map.perm[k] = best;
    for (int i = 0; i < ns; ++i) {
      const double* e =
          env.data() + (static_cast<size_t>(best[i]) * num_k + k) * num_l;
      for (int l = 0; l < num_l; ++l)
        centroid[i][l] =
            (visited * centroid[i][l] + e[l]) / (visited + 1);
    }
    ++visited;
  }

  // refinement sweeps: rebuild the centroids from the whole assignment and
  // re-pick every band until the labeling is a fixed point, so early greedy
  // choices made against immature centroids get revisited
  for (int sweep = 0; sweep < 50; ++sweep) {
    for (int i = 0; i < ns; ++i)
      std::fill(centroid[i].begin(), centroid[i].end(), 0.0);
    for (int k = 0; k < num_k; ++k)
      for (int i = 0; i < ns; ++i) {
        const double* e =
            env.data() +
            (static_cast<size_t>(map.perm[k][i]) * num_k + k) * num_l;
        for (int l = 0; l < num_l; ++l) centroid[i][l] += e[l];
      }
    for (int i = 0; i < ns; ++i)
      for (int l = 0; l < num_l; ++l) centroid[i][l] /= num_k;
    bool changed = false;
    for (int k = 0; k < num_k; ++k) {
      std::vector<int> sigma = ident;
      std::vector<int> best = ident;
      double best_score = -1e300;
      do {
        double score = 0.0;
        for (int i = 0; i < ns; ++i)
          score += pearson(
              env.data() +
                  (static_cast<size_t>(sigma[i]) * num_k + k) * num_l,
              centroid[i].data(), num_l);
        if (score > best_score) {  // strict: lexicographically first wins ties
          best_score = score;
          best = sigma;
        }
      } while (std::next_permutation(sigma.begin(), sigma.end()));
      if (best != map.perm[k]) {
        map.perm[k] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return map;
}

void apply_permutation(const PermutationMap& map, ScmParams* params) {
  const int ns = params->num_sources;
  if (static_cast<int>(map.perm.size()) != params->num_bins)
    throw UsageError("apply_permutation: map does not match geometry");
  parallel_for(params->num_bins, [&](int k) {
    const std::vector<int>& p = map.perm[k];
    std::vector<double> v_old(static_cast<size_t>(ns) * params->num_frames);
    std::vector<SmallMat> r_old(ns);
    std::vector<SmallMat> h_old(static_cast<size_t>(ns) * params->reverb_taps);
    for (int i = 0; i < ns; ++i) {
      for (int l = 0; l < params->num_frames; ++l)
        v_old[static_cast<size_t>(i) * params->num_frames + l] =
            params->v_at(i, l, k);
      r_old[i] = params->R_at(i, k);
      for (int d = 0; d < params->reverb_taps; ++d)
        h_old[static_cast<size_t>(i) * params->reverb_taps + d] =
            params->H_at(i, d, k);
    }
    for (int s = 0; s < ns; ++s) {
      const int src = p[s];
      for (int l = 0; l < params->num_frames; ++l)
        params->v_at(s, l, k) =
            v_old[static_cast<size_t>(src) * params->num_frames + l];
      params->R_at(s, k) = r_old[src];
      for (int d = 0; d < params->reverb_taps; ++d)
        params->H_at(s, d, k) =
            h_old[static_cast<size_t>(src) * params->reverb_taps + d];
    }
  });
}

GaussianPosterior posterior_field(const Spectrogram& spec,
                                  const ScmParams& params) {
  if (params.num_frames != spec.num_frames ||
      params.num_bins != spec.num_bins || params.num_mics != spec.num_channels)
    throw UsageError("posterior_field: parameter geometry does not match");
  const int nm = params.num_mics;
  GaussianPosterior post;
  post.resize(params.num_sources, params.num_frames, params.num_bins, nm);
  parallel_for(params.num_bins, [&](int k) {
    for (int l = 0; l < params.num_frames; ++l) {
      const SmallMat s = assemble_scm(params, l, k);
      const bool degenerate = real_trace(s) <= 0.0;
      SmallMat s_inv;
      if (!degenerate) s_inv = wiener_inverse(s).inv;
      for (int i = 0; i < params.num_sources; ++i) {
        const SmallMat b = params.v_at(i, l, k) * params.R_at(i, k);
        if (degenerate) {
          post.mu_at(i, l, k).setZero();
          post.V_at(i, l, k) = b;
          continue;
        }
        const SmallMat w = b * s_inv;
        post.mu_at(i, l, k) = w * spec.bin_vec(l, k);
        post.V_at(i, l, k) = hermitize(b - w * b);
      }
    }
  });
  return post;
}

Spectrogram posterior_mean_spec(const GaussianPosterior& post, int source,
                                const Spectrogram& geometry) {
  if (source < 0 || source >= post.num_sources)
    throw UsageError("posterior_mean_spec: source index out of range");
  if (post.num_frames != geometry.num_frames ||
      post.num_bins != geometry.num_bins ||
      post.num_mics != geometry.num_channels)
    throw UsageError("posterior_mean_spec: geometry mismatch");
  Spectrogram out = geometry;
  out.kind = SpecKind::source_image;
  for (int k = 0; k < out.num_bins; ++k)
    for (int l = 0; l < out.num_frames; ++l) {
      const auto mu = post.mu_at(source, l, k);
      for (int m = 0; m < out.num_channels; ++m) out.at(l, k, m) = mu(m);
    }
  return out;
}

ScmParams init_params(const Spectrogram& spec, const PcsgConfig& cfg) {
  if (cfg.num_sources < 1) throw UsageError("init_params: need >= 1 source");
  if (cfg.reverb_taps < 0) throw UsageError("init_params: reverb_taps < 0");
  const int nm = spec.num_channels;
  ScmParams params;
  params.resize(cfg.num_sources, spec.num_frames, spec.num_bins, nm,
                cfg.reverb_taps);

  for (int i = 0; i < cfg.num_sources; ++i)
    for (int k = 0; k < spec.num_bins; ++k)
      for (int l = 0; l < spec.num_frames; ++l)
        params.v_at(i, l, k) = spec.bin_vec(l, k).squaredNorm() /
                               (static_cast<double>(nm) * cfg.num_sources);

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5c4d5e));
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (int i = 0; i < cfg.num_sources; ++i)
    for (int k = 0; k < spec.num_bins; ++k) {
      SmallMat a(nm, nm);
      for (int r = 0; r < nm; ++r)
        for (int c = 0; c < nm; ++c) a(r, c) = cd(gauss(rng), gauss(rng));
      const SmallMat r0 =
          SmallMat::Identity(nm, nm) + 0.1 * (a + a.adjoint());
      params.R_at(i, k) =
          eig_floor(r0, kEigFloorRel * real_trace(r0) / nm);
      for (int d = 0; d < cfg.reverb_taps; ++d)
        params.H_at(i, d, k) = 0.05 * SmallMat::Identity(nm, nm);
    }
  const std::vector<double> band_power = spec.mean_band_power();
  for (int k = 0; k < spec.num_bins; ++k)
    params.Rn_at(k) = 0.01 * band_power[k] * SmallMat::Identity(nm, nm);
  return params;
}

PcsgResult pcsg_separate(const Spectrogram& spec, const PcsgConfig& cfg) {
  if (cfg.em_iters < 0) throw UsageError("pcsg_separate: em_iters < 0");
  PcsgResult res;
  res.params = init_params(spec, cfg);
  res.log_likelihood.reserve(cfg.em_iters);
  for (int it = 0; it < cfg.em_iters; ++it) {
    res.params = em_iterate(spec, res.params);
    res.log_likelihood.push_back(log_likelihood(spec, res.params));
  }
  apply_permutation(solve_permutation(res.params), &res.params);
  res.posterior = posterior_field(spec, res.params);
  return res;
}

}  // namespace lgmsep
