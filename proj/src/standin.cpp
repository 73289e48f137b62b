#include "omit/standin.hpp"

#include <cmath>

#include "omit/rng.hpp"
#include "omit/special.hpp"

namespace omit {

namespace {
const char* kCovariates[] = {"sex",     "nonwhite", "bweight", "afqt",     "mage",
                             "college", "breastfed", "daycare", "premature"};
constexpr int kNumCovariates = 9;
constexpr double kTreatmentEffect = 8.0;
}  // namespace

CsvSchema survey_standin_schema() {
  CsvSchema schema;
  schema.outcome = "piatm";
  schema.treatment = "hiincome";
  for (const char* c : kCovariates) schema.covariates.push_back(c);
  return schema;
}

ObservationTable make_survey_standin(int n, std::uint64_t seed) {
  const RandomStream base(seed);
  const RandomStream xs = base.sub(0);
  const RandomStream ts = base.sub(1);
  const RandomStream ys = base.sub(2);
  const RandomStream rs = base.sub(3);

  ObservationTable table;
  table.X.resize(n, kNumCovariates);
  table.y.resize(n);
  table.t.resize(n);
  table.r.resize(n);
  table.covariate_names.assign(kCovariates, kCovariates + kNumCovariates);
  const CsvSchema schema = survey_standin_schema();
  table.outcome_name = schema.outcome;
  table.treatment_name = schema.treatment;

  for (int i = 0; i < n; ++i) {
    const std::uint64_t c = static_cast<std::uint64_t>(i) * 16;
    const double sex = xs.uniform(c) < 0.5 ? 1.0 : 0.0;
    const double nonwhite = xs.uniform(c + 1) < 0.45 ? 1.0 : 0.0;
    const double bweight = xs.normal(c + 2);  // continuous covariates pre-standardized
    const double afqt = xs.normal(c + 3);
    const double mage = xs.normal(c + 4);
    const double college = xs.uniform(c + 5) < std_normal_cdf(-0.8 + 0.7 * afqt) ? 1.0 : 0.0;
    const double breastfed = xs.uniform(c + 6) < 0.3 ? 1.0 : 0.0;
    const double daycare = xs.uniform(c + 7) < 0.5 ? 1.0 : 0.0;
    const double premature = xs.uniform(c + 8) < std_normal_cdf(-1.3 - 0.3 * bweight) ? 1.0 : 0.0;
    table.X.row(i) << sex, nonwhite, bweight, afqt, mage, college, breastfed, daycare, premature;

    // Treatment: high family income, ~25% as in an upper-quartile split.
    const double pt = std_normal_cdf(-0.85 + 0.45 * afqt + 0.35 * college + 0.2 * mage -
                                     0.25 * nonwhite);
    const int t = ts.bernoulli(pt, i) ? 1 : 0;

    // Centered test-score outcome with a positive treatment effect.
    const double mean = 4.0 * afqt + 2.0 * mage + 1.5 * bweight - 2.0 * nonwhite +
                        1.0 * breastfed + kTreatmentEffect * (t - 0.25);
    const double y = mean + 18.0 * ys.normal(i);

    // MAR missingness on covariates and the outcome, ~20% marginally.
    const double pr = std_normal_cdf(-0.92 - 0.25 * mage - 0.2 * college - 0.1 * afqt +
                                     0.3 * nonwhite + 0.005 * y);
    const int r = rs.bernoulli(pr, i) ? 1 : 0;

    table.y(i) = y;
    table.r(i) = r;
    table.t(i) = r == 1 ? ObservationTable::kMissing : t;
  }
  table.validate();
  return table;
}

}  // namespace omit
