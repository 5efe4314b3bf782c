// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>

#include "lgmsep/fft.hpp"

namespace lgmsep {

namespace {

constexpr double kDbCap = 100.0;
constexpr double kActiveFloorDb = -35.0;  // frame activity vs utterance peak

double safe_db_ratio(double num, double den) {
  if (num <= 0.0) return -kDbCap;
  if (den <= num * 1e-10) return kDbCap;
  return std::clamp(10.0 * std::log10(num / den), -kDbCap, kDbCap);
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

// Frames both signals identically; returns indices of frames whose reference
// power clears the activity floor.
struct FramePair {
  std::vector<double> est, ref;
};

std::vector<FramePair> active_frames(const std::vector<double>& est,
                                     const std::vector<double>& ref,
                                     int frame, int hop) {
  if (est.size() != ref.size())
    throw UsageError("metrics: signals must have equal length");
  const long n = static_cast<long>(ref.size());
  if (n < frame) throw UsageError("metrics: signal shorter than one frame");
  const std::vector<double> win = hann_window(frame);

  std::vector<FramePair> frames;
  std::vector<double> powers;
  for (long start = 0; start + frame <= n; start += hop) {
    FramePair fp;
    fp.est.resize(frame);
    fp.ref.resize(frame);
    double p = 0.0;
    for (int i = 0; i < frame; ++i) {
      fp.est[i] = est[start + i] * win[i];
      fp.ref[i] = ref[start + i] * win[i];
      p += fp.ref[i] * fp.ref[i];
    }
    powers.push_back(p);
    frames.push_back(std::move(fp));
  }
  const double peak = *std::max_element(powers.begin(), powers.end());
  const double floor = peak * std::pow(10.0, kActiveFloorDb / 10.0);
  std::vector<FramePair> act;
  for (size_t i = 0; i < frames.size(); ++i)
    if (powers[i] > floor && powers[i] > 0.0)
      act.push_back(std::move(frames[i]));
  return act;
}

// Toeplitz autocorrelation method, A(z) = 1 + sum a_k z^-k.
bool levinson_lpc(const std::vector<double>& frame, int order,
                  std::vector<double>* a_out) {
  std::vector<double> r(order + 1, 0.0);
  const int n = static_cast<int>(frame.size());
  for (int d = 0; d <= order; ++d)
    for (int t = d; t < n; ++t) r[d] += frame[t] * frame[t - d];
  if (r[0] <= 0.0) return false;
  r[0] *= 1.0 + 1e-9;  // slight ridge keeps the recursion stable

  std::vector<double> a(order + 1, 0.0), prev(order + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (int m = 1; m <= order; ++m) {
    double acc = r[m];
    for (int k = 1; k < m; ++k) acc += a[k] * r[m - k];
    const double refl = -acc / err;
    prev = a;
    a[m] = refl;
    for (int k = 1; k < m; ++k) a[k] = prev[k] + refl * prev[m - k];
    err *= 1.0 - refl * refl;
    if (err <= 0.0) return false;
  }
  *a_out = std::move(a);
  return true;
}

// Cepstrum of 1/A(z): c_n = -a_n - sum_{k=1}^{n-1} (k/n) c_k a_{n-k}.
std::vector<double> lpc_cepstrum(const std::vector<double>& a, int order) {
  std::vector<double> c(order + 1, 0.0);
  for (int n = 1; n <= order; ++n) {
    double acc = -a[n];
    for (int k = 1; k < n; ++k)
      acc -= (static_cast<double>(k) / n) * c[k] * a[n - k];
    c[n] = acc;
  }
  return c;
}

std::vector<std::vector<double>> mel_filterbank(int num_bands, int num_bins,
                                                double sample_rate) {
  auto to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto from_mel = [](double m) {
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  const double mel_max = to_mel(sample_rate / 2.0);
  std::vector<double> edges(num_bands + 2);
  for (int i = 0; i < num_bands + 2; ++i)
    edges[i] = from_mel(mel_max * i / (num_bands + 1));
  std::vector<std::vector<double>> fb(num_bands,
                                      std::vector<double>(num_bins, 0.0));
  const double hz_per_bin = sample_rate / 2.0 / (num_bins - 1);
  for (int b = 0; b < num_bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = k * hz_per_bin;
      if (f <= lo || f >= hi) continue;
      fb[b][k] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

}  // namespace

BssEvalResult bss_eval(const std::vector<std::vector<double>>& estimates,
                       const std::vector<std::vector<double>>& references,
                       int filter_taps) {
  const int ns = static_cast<int>(references.size());
  if (ns < 1 || static_cast<int>(estimates.size()) != ns)
    throw UsageError("bss_eval: need matching estimate and reference counts");
  const long n = static_cast<long>(references[0].size());
  for (const auto& r : references)
    if (static_cast<long>(r.size()) != n)
      throw UsageError("bss_eval: reference lengths differ");
  for (const auto& e : estimates)
    if (static_cast<long>(e.size()) != n)
      throw UsageError("bss_eval: estimate length differs from references");
  if (n <= 2 * filter_taps)
    throw UsageError("bss_eval: signals too short for the distortion filters");
  for (const auto& r : references) {
    double p = 0.0;
    for (double v : r) p += v * v;
    if (p <= 0.0) throw UsageError("bss_eval: zero reference signal");
  }

  const int taps = filter_taps;
  // r[j][j'][d + taps - 1] = sum_t ref_j[t] * ref_j'[t - d], zeros outside
  std::vector<std::vector<std::vector<double>>> corr(
      ns, std::vector<std::vector<double>>(ns,
                                           std::vector<double>(2 * taps - 1)));
  for (int j = 0; j < ns; ++j)
    for (int jp = 0; jp < ns; ++jp)
      for (int d = -(taps - 1); d <= taps - 1; ++d) {
        double acc = 0.0;
        const long lo = std::max<long>(0, d);
        const long hi = std::min<long>(n, n + d);
        for (long t = lo; t < hi; ++t) acc += references[j][t] *
                                              references[jp][t - d];
        corr[j][jp][d + taps - 1] = acc;
      }

  const int dim = ns * taps;
  Eigen::MatrixXd gram(dim, dim);
  for (int j = 0; j < ns; ++j)
    for (int jp = 0; jp < ns; ++jp)
      for (int t1 = 0; t1 < taps; ++t1)
        for (int t2 = 0; t2 < taps; ++t2)
          gram(j * taps + t1, jp * taps + t2) =
              corr[j][jp][(t2 - t1) + taps - 1];
  const double ridge = 1e-10 * gram.trace() / dim;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> full(gram);
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> own(ns);
  for (int j = 0; j < ns; ++j)
    own[j].compute(gram.block(j * taps, j * taps, taps, taps));

  // energy split per (reference i, estimate e)
  Eigen::MatrixXd sdr(ns, ns), sir(ns, ns);
  for (int e = 0; e < ns; ++e) {
    Eigen::VectorXd c(dim);
    for (int j = 0; j < ns; ++j)
      for (int t = 0; t < taps; ++t) {
        double acc = 0.0;
        for (long s = t; s < n; ++s) acc += estimates[e][s] *
                                            references[j][s - t];
        c(j * taps + t) = acc;
      }
    double e_total = 0.0;
    for (double v : estimates[e]) e_total += v * v;
    const double proj_all = c.dot(full.solve(c));
    for (int i = 0; i < ns; ++i) {
      const Eigen::VectorXd ci = c.segment(i * taps, taps);
      const double s_target = ci.dot(own[i].solve(ci));
      const double e_interf = std::max(0.0, proj_all - s_target);
      const double e_artif = std::max(0.0, e_total - proj_all);
      sdr(i, e) = safe_db_ratio(s_target, e_interf + e_artif);
      sir(i, e) = safe_db_ratio(s_target, e_interf);
    }
  }

  // assignment maximizing mean SDR
  std::vector<int> sigma(ns), best(ns);
  std::iota(sigma.begin(), sigma.end(), 0);
  best = sigma;
  double best_score = -1e300;
  do {
    double score = 0.0;
    for (int i = 0; i < ns; ++i) score += sdr(i, sigma[i]);
    if (score > best_score) {
      best_score = score;
      best = sigma;
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));

  BssEvalResult res;
  res.perm = best;
  res.sdr.resize(ns);
  res.sir.resize(ns);
  for (int i = 0; i < ns; ++i) {
    res.sdr[i] = sdr(i, best[i]);
    res.sir[i] = sir(i, best[i]);
  }
  return res;
}

double cepstral_distance(const std::vector<double>& estimate,
                         const std::vector<double>& reference,
                         double sample_rate) {
  (void)sample_rate;
  constexpr int kOrder = 10;
  constexpr int kFrame = 256;
  constexpr int kHop = 128;
  const auto frames = active_frames(estimate, reference, kFrame, kHop);
  if (frames.empty())
    throw UsageError("cepstral_distance: no active frames");

  double sum = 0.0;
  long count = 0;
  std::vector<double> a_est, a_ref;
  for (const auto& fp : frames) {
    if (!levinson_lpc(fp.est, kOrder, &a_est) ||
        !levinson_lpc(fp.ref, kOrder, &a_ref))
      continue;
    const std::vector<double> c_est = lpc_cepstrum(a_est, kOrder);
    const std::vector<double> c_ref = lpc_cepstrum(a_ref, kOrder);
    double acc = 0.0;
    for (int k = 1; k <= kOrder; ++k)
      acc += (c_est[k] - c_ref[k]) * (c_est[k] - c_ref[k]);
    const double d = (10.0 / std::log(10.0)) * std::sqrt(2.0 * acc);
    sum += std::clamp(d, 0.0, 10.0);
    ++count;
  }
  if (count == 0) throw NumericError("cepstral_distance: no valid frames");
  return sum / count;
}

double fwseg_snr(const std::vector<double>& estimate,
                 const std::vector<double>& reference, double sample_rate) {
  constexpr int kBands = 23;
  constexpr int kFrame = 256;
  constexpr int kHop = 128;
  const auto frames = active_frames(estimate, reference, kFrame, kHop);
  if (frames.empty()) throw UsageError("fwseg_snr: no active frames");
  const int num_bins = kFrame / 2 + 1;
  const auto fb = mel_filterbank(kBands, num_bins, sample_rate);

  double total = 0.0;
  long count = 0;
  for (const auto& fp : frames) {
    const std::vector<cd> spec_e = fft::real_forward(fp.est);
    const std::vector<cd> spec_r = fft::real_forward(fp.ref);
    double num = 0.0, den = 0.0;
    for (int b = 0; b < kBands; ++b) {
      double be = 0.0, br = 0.0;
      for (int k = 0; k < num_bins; ++k) {
        if (fb[b][k] == 0.0) continue;
        be += fb[b][k] * std::abs(spec_e[k]);
        br += fb[b][k] * std::abs(spec_r[k]);
      }
      if (br <= 0.0) continue;
      const double diff = br - be;
      const double snr = std::clamp(
          10.0 * std::log10(br * br / std::max(diff * diff, 1e-300)), -10.0,
          35.0);
      const double w = std::pow(br, 0.2);
      num += w * snr;
      den += w;
    }
    if (den > 0.0) {
      total += num / den;
      ++count;
    }
  }
  if (count == 0) throw NumericError("fwseg_snr: no valid frames");
  return total / count;
}

UtteranceScore score_utterance(
    const std::string& name,
    const std::vector<std::vector<double>>& estimates,
    const std::vector<std::vector<double>>& references, double sample_rate) {
  const BssEvalResult bss = bss_eval(estimates, references);
  UtteranceScore score;
  score.name = name;
  score.perm = bss.perm;
  const int ns = static_cast<int>(references.size());
  double cd_sum = 0.0, fw_sum = 0.0;
  for (int i = 0; i < ns; ++i) {
    score.sdr += bss.sdr[i] / ns;
    score.sir += bss.sir[i] / ns;
    cd_sum += cepstral_distance(estimates[bss.perm[i]], references[i],
                                sample_rate);
    fw_sum += fwseg_snr(estimates[bss.perm[i]], references[i], sample_rate);
  }
  score.cd = cd_sum / ns;
  score.fwsnr = fw_sum / ns;
  return score;
}

UtteranceScore MetricReport::means() const {
  UtteranceScore m;
  m.name = "mean";
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.sdr += r.sdr;
    m.sir += r.sir;
    m.cd += r.cd;
    m.fwsnr += r.fwsnr;
  }
  const double n = static_cast<double>(rows.size());
  m.sdr /= n;
  m.sir /= n;
  m.cd /= n;
  m.fwsnr /= n;
  return m;
}

std::string MetricReport::to_json() const {
  std::ostringstream os;
  os.precision(10);
  os << "{\"utterances\": [";
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << (i ? ", " : "") << "{\"name\": \"" << r.name
       << "\", \"sdr\": " << r.sdr << ", \"sir\": " << r.sir
       << ", \"cd\": " << r.cd << ", \"fwsegsnr\": " << r.fwsnr << "}";
  }
  const UtteranceScore m = means();
  os << "], \"mean\": {\"sdr\": " << m.sdr << ", \"sir\": " << m.sir
     << ", \"cd\": " << m.cd << ", \"fwsegsnr\": " << m.fwsnr << "}}";
  return os.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "name,sdr,sir,cd,fwsegsnr\n";
  for (const auto& r : rows)
    os << r.name << "," << r.sdr << "," << r.sir << "," << r.cd << ","
       << r.fwsnr << "\n";
  const UtteranceScore m = means();
  os << "mean," << m.sdr << "," << m.sir << "," << m.cd << "," << m.fwsnr
     << "\n";
  return os.str();
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-24s %9s %9s %7s %9s\n", "utterance",
                "SDR dB", "SIR dB", "CD dB", "fwSNR dB");
  os << buf;
  auto line = [&](const UtteranceScore& r) {
    std::snprintf(buf, sizeof(buf), "%-24s %9.2f %9.2f %7.2f %9.2f\n",
                  r.name.c_str(), r.sdr, r.sir, r.cd, r.fwsnr);
    os << buf;
  };
  for (const auto& r : rows) line(r);
  line(means());
  return os.str();
}

}  // namespace lgmsep
