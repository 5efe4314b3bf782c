// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_METRICS_HPP
#define LGMSEP_METRICS_HPP

#include <string>
#include <vector>

#include "lgmsep/common.hpp"

namespace lgmsep {

// Projection-based separation scores. Each estimate is decomposed against
// the span of all reference signals filtered by `filter_taps`-long
// time-invariant filters; SDR and SIR come out of the energy split and the
// reported permutation maximizes mean SDR. Values are capped to +-100 dB.
struct BssEvalResult {
  std::vector<double> sdr;  // per reference source, aligned
  std::vector<double> sir;
  std::vector<int> perm;    // reference i was matched with estimate perm[i]
};

BssEvalResult bss_eval(const std::vector<std::vector<double>>& estimates,
                       const std::vector<std::vector<double>>& references,
                       int filter_taps = 512);

// Mean LPC-cepstrum distance in dB over active frames, gain-invariant
// (c_0 excluded), clamped to [0, 10] per frame. Lower is better.
double cepstral_distance(const std::vector<double>& estimate,
                         const std::vector<double>& reference,
                         double sample_rate = 8000.0);

// Frequency-weighted segmental SNR over mel bands, per-band SNR clamped to
// [-10, 35] dB and weighted by reference band magnitude^0.2.
double fwseg_snr(const std::vector<double>& estimate,
                 const std::vector<double>& reference,
                 double sample_rate = 8000.0);

struct UtteranceScore {
  std::string name;
  double sdr = 0.0;       // mean over sources
  double sir = 0.0;
  double cd = 0.0;
  double fwsnr = 0.0;
  std::vector<int> perm;
};

struct MetricReport {
  std::vector<UtteranceScore> rows;

  UtteranceScore means() const;
  std::string to_json() const;
  std::string to_csv() const;
  std::string to_text() const;
};

// Scores one utterance: aligns estimates to references with bss_eval, then
// evaluates the signal metrics on the aligned reference channel 0 pairs.
UtteranceScore score_utterance(
    const std::string& name,
    const std::vector<std::vector<double>>& estimates,
    const std::vector<std::vector<double>>& references, double sample_rate);

}  // namespace lgmsep

#endif  // LGMSEP_METRICS_HPP
