#pragma once

#include <vector>

#include "asckit/common.hpp"
#include "asckit/corpus.hpp"
#include "asckit/features.hpp"
#include "asckit/rng.hpp"
#include "asckit/tensor.hpp"

namespace asckit {

struct AugmentConfig {
  double p_fms = 0.4;       // batch-level Freq-MixStyle probability
  double fms_alpha = 0.3;   // Beta parameter for the FMS mixing coefficient
  double p_dir = 0.6;       // batch-level DIR probability
  double mixup_alpha = 1.0; // Beta parameter for mixup (0 disables)
  int freq_mask_max = 48;   // maximum masked mel bins (0 disables)
  uint64_t rng_seed = 0;

  void validate(int n_mels) const;
};

// Mixup pairing for one batch: partner indices come from a seeded permutation
// and one lambda is drawn per batch from Beta(alpha, alpha). The plan is kept
// explicit so teacher logits can be mixed with exactly the same coefficients.
struct MixupPlan {
  double lambda = 1.0;
  std::vector<int> partner;
};

MixupPlan draw_mixup_plan(int batch_size, double alpha, Rng& rng);

// x' = lambda*x_i + (1-lambda)*x_partner(i); same for the target rows, which
// keeps each row summing to 1.
void apply_mixup(Tensor& x, Mat& targets, const MixupPlan& plan);
void apply_mixup_rows(Mat& rows, const MixupPlan& plan);

// Freq-MixStyle: per-item frequency-band statistics are mixed with a
// partner's (lambda ~ Beta(alpha, alpha), batch-wide) and each item is
// re-denormalized with the mixed statistics. Labels are untouched.
// apply=false is the batch-level gate and returns the input unchanged.
void freq_mixstyle(SpectrogramBatch& batch, double alpha, bool apply, Rng& rng);

// Deterministic core of freq_mixstyle with an explicit coefficient and
// partner permutation. lambda=1 and partner=self are exact identities up to
// the epsilon in the band std.
void freq_mixstyle_with(SpectrogramBatch& batch, double lambda,
                        const std::vector<int>& partner);

// Device-impulse-response augmentation: full convolution with a uniformly
// chosen bank member, truncated to the input length and peak-normalized to
// the input peak. A unit-delta response is the exact identity.
AudioClip dir_convolve(const AudioClip& clip,
                       const std::vector<std::vector<float>>& dir_bank,
                       bool apply, Rng& rng);

// Frequency masking: per item, a contiguous band of width w ~ U{0..max_bins}
// at a uniform offset is set to the batch mean (computed before masking).
void freq_mask(SpectrogramBatch& batch, int max_bins, Rng& rng);

// Masks mel rows [offset, offset+width) of one batch item with `fill`.
void apply_freq_mask_band(Tensor& values, int item, int offset, int width,
                          float fill);

// Pitch shift by mel-fmax perturbation: returns the randomized fmax (Hz) used
// to rebuild the filterbank for one batch. shift_range is a fraction interval
// within (0, 1], applied to the config's effective fmax.
double pitch_shift_fmax(const FeatureConfig& config, Rng& rng,
                        double shift_lo = 0.9, double shift_hi = 1.0);

// Loads every WAV in a directory as one impulse response, resampled to
// target_rate. Files are loaded in lexicographic order.
std::vector<std::vector<float>> load_dir_bank(const std::string& dir,
                                              int target_rate);

}  // namespace asckit
