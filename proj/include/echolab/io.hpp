#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "echolab/datasets.hpp"
#include "echolab/trace.hpp"

namespace echolab {

/// Shortest decimal that round-trips the double (17 significant digits at most).
std::string format_number(double v);

/// Decay CSV with header `t12_s,t23_s,intensity,sigma`. `t12_s` and `intensity` are
/// required; a missing `t23_s` column means 0, a missing `sigma` column means 1. The echo
/// kind is inferred (all t23 == 0 gives 2PE). Errors name the offending line.
DecayDataset read_decay_csv(std::istream& in, const ExperimentConditions& conditions = {});
DecayDataset load_decay_csv(const std::filesystem::path& path, const ExperimentConditions& conditions = {});
void write_decay_csv(std::ostream& out, const DecayDataset& d);
void save_decay_csv(const std::filesystem::path& path, const DecayDataset& d);

/// Sweep CSV: `<axis column>,<observable column>,sigma`, e.g. `B_T,GammaSD_Hz,sigma`.
SweepDataset read_sweep_csv(std::istream& in, const ExperimentConditions& fixed = {});
SweepDataset load_sweep_csv(const std::filesystem::path& path, const ExperimentConditions& fixed = {});
void write_sweep_csv(std::ostream& out, const SweepDataset& s);
void save_sweep_csv(const std::filesystem::path& path, const SweepDataset& s);

/// Trace CSV: `time_s,voltage_v`, uniformly sampled and strictly increasing in time.
/// f_if and the gate are not part of the file and are left at their defaults.
HeterodyneTrace read_trace_csv(std::istream& in);
HeterodyneTrace load_trace_csv(const std::filesystem::path& path);
void write_trace_csv(std::ostream& out, const HeterodyneTrace& tr);
void save_trace_csv(const std::filesystem::path& path, const HeterodyneTrace& tr);

/// Generic numeric table writer for plot-ready output.
void save_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace echolab
