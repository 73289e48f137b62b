#pragma once

#include <cstdint>

#include "omit/data.hpp"

namespace omit {

/// Synthetic survey-style dataset with the column layout of the NLSY
/// illustration: mixed binary/continuous covariates, a centered test-score
/// outcome, a binary income treatment with roughly 20% of statuses
/// missing at random. For demos and tests only; the numbers carry no
/// real-world meaning.
ObservationTable make_survey_standin(int n, std::uint64_t seed);

/// Schema matching make_survey_standin's write_csv output.
CsvSchema survey_standin_schema();

}  // namespace omit
