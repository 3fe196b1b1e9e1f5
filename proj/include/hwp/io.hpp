#pragma once

#include <string>
#include <utility>

#include "hwp/classical.hpp"
#include "hwp/direct.hpp"
#include "hwp/envelope.hpp"
#include "hwp/spectral.hpp"

namespace hwp {

/// t,x,xi,S[,S_mod] with 17 significant digits.
void write_trajectory_csv(const TrajectoryPath& path, const std::string& file);

/// y,re,im with 17 significant digits.
void write_field_csv(const Field& f, const std::string& file);
/// Reads y,re,im back. The grid is rebuilt from the first abscissa and the row count.
Field read_field_csv(const std::string& file);

/// 24-byte header (n as uint64, L and t as float64) followed by interleaved
/// re/im float64, all little-endian.
void write_field_binary(const Field& f, double t, const std::string& file);
std::pair<Field, double> read_field_binary(const std::string& file);

/// t,mass,sigma1,sigma2,sigma3,sigma4,G,theta at every snapshot.
void write_envelope_diagnostics(const EnvelopeRun& run, const std::string& file);
/// t,mass at every step.
void write_direct_diagnostics(const DirectRun& run, const std::string& file);

void write_text(const std::string& file, const std::string& text);

}  // namespace hwp
