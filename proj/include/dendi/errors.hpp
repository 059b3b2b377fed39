#pragma once

#include <stdexcept>
#include <string>

namespace dendi {

// Base class for recoverable fitting/search failures. During candidate
// searches these are caught and the candidate is discarded; anything else
// (std::invalid_argument etc.) indicates caller misuse and propagates.
struct DendiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Design matrix has collinear columns; the candidate must be discarded.
struct RankDeficientError : DendiError {
    using DendiError::DendiError;
};

// IRLS produced non-finite working weights (separation or overflow).
struct NonFiniteWeightsError : DendiError {
    using DendiError::DendiError;
};

// A constructed design column is constant across observations.
struct DegenerateColumnError : DendiError {
    using DendiError::DendiError;
};

// No admissible split threshold exists for a covariate.
struct EmptyGridError : DendiError {
    using DendiError::DendiError;
};

// Every candidate in a split search was degenerate or unfittable.
struct AllCandidatesDegenerateError : DendiError {
    using DendiError::DendiError;
};

// More than 10% of LOOCV folds failed; the candidate is unavailable.
struct TooManyFailedFoldsError : DendiError {
    using DendiError::DendiError;
};

}  // namespace dendi
