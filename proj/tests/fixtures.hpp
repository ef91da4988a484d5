#pragma once

#include <string>

#include "fmx/commands.hpp"

#ifndef FMX_FIXTURE_DIR
#error "FMX_FIXTURE_DIR must point at tests/fixtures"
#endif

inline std::string fixture_path(const std::string& name) { return std::string(FMX_FIXTURE_DIR) + "/" + name; }

inline std::string fixture(const std::string& name) { return fmx::read_file(fixture_path(name)); }

inline fmx::Dataset heart() { return fmx::load_dataset(fixture("heart.data"), fixture("heart.names")); }
