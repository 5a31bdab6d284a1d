#include "nimpanel/dist.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

namespace nim {

double chi2_sf(double x, int df) {
  if (df <= 0) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, x)));
}

double f_sf(double x, int df1, int df2) {
  if (df1 <= 0 || df2 <= 0) return 1.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, x)));
}

double normal_two_sided_p(double z) {
  boost::math::normal dist;
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

}  // namespace nim
