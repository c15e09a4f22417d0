// SPDX-License-Identifier: Apache-2.0
#include "emovc/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "emovc/error.hpp"

namespace emovc::evalkit {

void DtwPath::validate(std::size_t t1, std::size_t t2) const {
  require(!pairs.empty(), "DTW path is empty");
  require(pairs.front() == std::make_pair<std::size_t, std::size_t>(0, 0), "DTW path must start at (0,0)");
  require(pairs.back().first == t1 - 1 && pairs.back().second == t2 - 1, "DTW path must end at the last frames");
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const auto di = pairs[k].first - pairs[k - 1].first, dj = pairs[k].second - pairs[k - 1].second;
    require(pairs[k].first >= pairs[k - 1].first && pairs[k].second >= pairs[k - 1].second && di <= 1 && dj <= 1 &&
                di + dj >= 1,
            "DTW path takes an invalid step at position " + std::to_string(k));
  }
}

namespace {
double frame_distance(const Matrix& x, std::size_t i, const Matrix& y, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.cols; ++d) {
    const double diff = x(i, d) - y(j, d);
    s += diff * diff;
  }
  return std::sqrt(s);
}
}  // namespace

DtwPath dtw_align(const Matrix& x, const Matrix& y, std::size_t band) {
  require(x.rows > 0 && y.rows > 0, "dtw_align: both sequences must be non-empty");
  require(x.cols == y.cols, "dtw_align: sequences differ in dimension");
  const std::size_t n = x.rows, m = y.rows;
  const double inf = std::numeric_limits<double>::infinity();
  auto inside = [&](std::size_t i, std::size_t j) {
    if (band == 0) return true;
    const double centre = m > 1 ? static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(m - 1) : 0.0;
    return std::abs(static_cast<double>(i) - centre) <= static_cast<double>(band);
  };
  std::vector<double> acc(n * m, inf);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (!inside(i, j)) continue;
      const double d = frame_distance(x, i, y, j);
      if (i == 0 && j == 0) {
        acc[0] = d;
        continue;
      }
      double best = inf;
      if (i && j) best = acc[(i - 1) * m + j - 1];
      if (i) best = std::min(best, acc[(i - 1) * m + j]);
      if (j) best = std::min(best, acc[i * m + j - 1]);
      acc[i * m + j] = best + d;
    }
  if (!std::isfinite(acc[n * m - 1]))
    fail(ErrorCode::configuration, "dtw_align: band " + std::to_string(band) + " admits no path");

  DtwPath path;
  path.cost = acc[n * m - 1];
  std::size_t i = n - 1, j = m - 1;
  path.pairs.emplace_back(i, j);
  while (i || j) {
    // Predecessor with the smallest accumulated cost; ties go to the diagonal, then (1,0).
    const double diag = i && j ? acc[(i - 1) * m + j - 1] : inf;
    const double up = i ? acc[(i - 1) * m + j] : inf;
    const double left = j ? acc[i * m + j - 1] : inf;
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

double mcd(const Matrix& mcc_t, const Matrix& mcc_c, const DtwPath& path, bool exclude_c0) {
  require(mcc_t.cols == mcc_c.cols && mcc_t.cols > (exclude_c0 ? 1u : 0u), "mcd: coefficient counts differ");
  path.validate(mcc_t.rows, mcc_c.rows);
  const double k = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (const auto& [i, j] : path.pairs) {
    double s = 0.0;
    for (std::size_t d = exclude_c0 ? 1 : 0; d < mcc_t.cols; ++d) {
      const double diff = mcc_t(i, d) - mcc_c(j, d);
      s += diff * diff;
    }
    total += k * std::sqrt(2.0 * s);
  }
  return total / static_cast<double>(path.pairs.size());
}

LogF0Mse logf0_mse(const std::vector<double>& f0_t, const std::vector<double>& f0_c,
                   const std::vector<std::uint8_t>& voicing_t, const std::vector<std::uint8_t>& voicing_c,
                   const DtwPath& path) {
  require(f0_t.size() == voicing_t.size() && f0_c.size() == voicing_c.size(), "logf0_mse: F0 and voicing lengths differ");
  path.validate(f0_t.size(), f0_c.size());
  LogF0Mse r;
  double sum = 0.0;
  for (const auto& [i, j] : path.pairs) {
    const bool vt = voicing_t[i], vc = voicing_c[j];
    if (vt && vc) {
      require(f0_t[i] > 0 && f0_c[j] > 0, "logf0_mse: voiced frame with non-positive F0");
      const double d = std::log(f0_t[i]) - std::log(f0_c[j]);
      sum += d * d;
      ++r.used;
    } else if (vt || vc) {
      ++r.excluded;
    }
  }
  r.value = r.used ? sum / static_cast<double>(r.used) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace emovc::evalkit
