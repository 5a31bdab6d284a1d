#pragma once

namespace nim {

// Upper-tail probabilities for the reference distributions.
double chi2_sf(double x, int df);
double f_sf(double x, int df1, int df2);
double normal_two_sided_p(double z);

}  // namespace nim
