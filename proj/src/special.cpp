#include "posefuse/special.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace posefuse {

namespace {

// Chebyshev series evaluation, Clenshaw recurrence (Cephes chbevl).
double chbevl(double x, const double* array, int n) {
  double b0 = array[0];
  double b1 = 0.0;
  double b2 = 0.0;
  for (int i = 1; i < n; ++i) {
    b2 = b1;
    b1 = b0;
    b0 = x * b1 - b2 + array[i];
  }
  return 0.5 * (b0 - b2);
}

// Chebyshev coefficients for exp(-x) I0(x) on [0, 8], argument x/2 - 2.
const double kI0A[] = {
    -4.41534164647933937950e-18, 3.33079451882223809783e-17,
    -2.43127984654795469359e-16, 1.71539128555513303061e-15,
    -1.16853328779934516808e-14, 7.67618549860493561688e-14,
    -4.85644678311192946090e-13, 2.95505266312963983461e-12,
    -1.72682629144155570723e-11, 9.67580903537323691224e-11,
    -5.18979560163526290666e-10, 2.65982372468238665035e-9,
    -1.30002500998624804212e-8,  6.04699502254191894932e-8,
    -2.67079385394061173391e-7,  1.11738753912010371815e-6,
    -4.41673835845875056359e-6,  1.64484480707288970893e-5,
    -5.75419501008210370398e-5,  1.88502885095841655729e-4,
    -5.76375574538582365885e-4,  1.63947561694133579842e-3,
    -4.32430999505057594430e-3,  1.05464603945949983183e-2,
    -2.37374148058994688156e-2,  4.93052842396707084878e-2,
    -9.49010970480476444210e-2,  1.71620901522208775349e-1,
    -3.04682672343198398683e-1,  6.76795274409476084995e-1};

// Chebyshev coefficients for sqrt(x) exp(-x) I0(x) on [8, inf), 32/x - 2.
const double kI0B[] = {
    -7.23318048787475395456e-18, -4.83050448594418207126e-18,
    4.46562142029675999901e-17,  3.46122286769746109310e-17,
    -2.82762398051658348494e-16, -3.42548561967721913462e-16,
    1.77256013305652638360e-15,  3.81168066935262242075e-15,
    -9.55484669882830764870e-15, -4.15056934728722208663e-14,
    1.54008621752140982691e-14,  3.85277838274214270114e-13,
    7.18012445138366623367e-13,  -1.79417853150680611778e-12,
    -1.32158118404477131188e-11, -3.14991652796324136454e-11,
    1.18891471078464383424e-11,  4.94060238822496958910e-10,
    3.39623202570838634515e-9,   2.26666899049817806459e-8,
    2.04891858946906374183e-7,   2.89137052083475648297e-6,
    6.88975834691682398426e-5,   3.36911647825569408990e-3,
    8.04490411014108831608e-1};

// Chebyshev coefficients for exp(-x) I1(x) / x on [0, 8], x/2 - 2.
const double kI1A[] = {
    2.77791411276104639959e-18,  -2.11142121435816608115e-17,
    1.55363195773620046921e-16,  -1.10559694773538630805e-15,
    7.60068429473540693410e-15,  -5.04218550472791168711e-14,
    3.22379336594557470981e-13,  -1.98397439776494371520e-12,
    1.17361862988909016308e-11,  -6.66348972350202774223e-11,
    3.62559028155211703701e-10,  -1.88724975172282928790e-9,
    9.38153738649577178388e-9,   -4.44505912879632808065e-8,
    2.00329475355213526229e-7,   -8.56872026469545474066e-7,
    3.47025130813767847674e-6,   -1.32731636560394358279e-5,
    4.78156510755005422638e-5,   -1.61760815825896745588e-4,
    5.12285956168575772895e-4,   -1.51357245063125314899e-3,
    4.15642294431288815669e-3,   -1.05640848946261981558e-2,
    2.47264490306265168283e-2,   -5.29459812080949914269e-2,
    1.02643658689847095384e-1,   -1.76416518357834055153e-1,
    2.52587186443633654823e-1};

// Chebyshev coefficients for sqrt(x) exp(-x) I1(x) on [8, inf), 32/x - 2.
const double kI1B[] = {
    7.51729631084210481353e-18,  4.41434832307170791151e-18,
    -4.65030536848935832153e-17, -3.20952592199342395980e-17,
    2.96262899764595013876e-16,  3.30820231092092828324e-16,
    -1.88035477551078244854e-15, -3.81440307243700780478e-15,
    1.04202769841288027642e-14,  4.27244001671195135429e-14,
    -2.10154184277266431302e-14, -4.08355111109219731823e-13,
    -7.19855177624590851209e-13, 2.03562854414708950722e-12,
    1.41258074366137813316e-11,  3.25260358301548823856e-11,
    -1.89749581235054123450e-11, -5.58974346219658380687e-10,
    -3.83538038596423702205e-9,  -2.63146884688951950684e-8,
    -2.51223623787020892529e-7,  -3.88256480887769039346e-6,
    -1.10588938762623716291e-4,  -9.76109749136146840777e-3,
    7.78576235018280120474e-1};

// K15 nodes/weights and embedded G7 weights (QUADPACK dqk15).
const double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
const double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
const double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkResult {
  double gauss;
  double kronrod;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double gauss = fc * kWg[3];
  double kron = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double f1 = f(c - x);
    const double f2 = f(c + x);
    kron += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {gauss * h, kron * h};
}

}  // namespace

double bessel_i0e(double x) {
  x = std::fabs(x);
  if (x <= 8.0) return chbevl(x / 2.0 - 2.0, kI0A, 30);
  return chbevl(32.0 / x - 2.0, kI0B, 25) / std::sqrt(x);
}

double bessel_i1e(double x) {
  const double z = std::fabs(x);
  double v;
  if (z <= 8.0) {
    v = chbevl(z / 2.0 - 2.0, kI1A, 29) * z;
  } else {
    v = chbevl(32.0 / z - 2.0, kI1B, 25) / std::sqrt(z);
  }
  return x < 0.0 ? -v : v;
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, double rel_tol) {
  if (a == b) return 0.0;
  struct Interval {
    double a, b;
    int depth;
  };
  std::vector<Interval> stack{{a, b, 0}};
  double total = gk15(f, a, b).kronrod;  // running whole-domain estimate
  double sum = 0.0;
  const double span = std::fabs(b - a);
  while (!stack.empty()) {
    const Interval iv = stack.back();
    stack.pop_back();
    const GkResult r = gk15(f, iv.a, iv.b);
    const double err = std::fabs(r.kronrod - r.gauss);
    const double budget =
        std::max(abs_tol, rel_tol * std::fabs(total)) * std::fabs(iv.b - iv.a) / span;
    if (err <= budget || iv.depth >= 52) {
      sum += r.kronrod;
    } else {
      const double m = 0.5 * (iv.a + iv.b);
      stack.push_back({iv.a, m, iv.depth + 1});
      stack.push_back({m, iv.b, iv.depth + 1});
    }
  }
  return sum;
}

}  // namespace posefuse
