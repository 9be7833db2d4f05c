#pragma once

#include <json.hpp>

#include "mcf/conley.hpp"
#include "mcf/duality.hpp"
#include "mcf/inducedmaps.hpp"
#include "mcf/moduli.hpp"
#include "mcf/zalgebra.hpp"

namespace mcf::io {

using json = nlohmann::ordered_json;

json to_json(const zalg::Integer& z);
json to_json(const zalg::IntMatrix& m);
json to_json(const zalg::GradedComplex& c);
json to_json(const zalg::HomologyResult& h);
json to_json(const zalg::GradedIntMap& m);
json to_json(const zalg::HomologyMap& m);
json to_json(const Vec& v);
json to_json(const flow::CriticalPoint& c);
json to_json(const moduli::BoundaryResult& b, const flow::MorseDatum& d);
json to_json(const conley::IsolationCertificate& c);
json to_json(const conley::LyapunovCertificate& c);
json to_json(const conley::IsolatedMapReport& r);
json to_json(const conley::FamilyScan& s);
json to_json(const conley::HomotopyScan& s);
json to_json(const conley::FlowMapReport& r);
json to_json(const conley::LocalHomology& l);
json to_json(const induced::InducedMap& m, const flow::MorseDatum& a, const flow::MorseDatum& b);
json to_json(const duality::SymmetryReport& r, const flow::MorseDatum& d);
json to_json(const Neighborhood& n);

zalg::IntMatrix matrix_from_json(const json& j);
// Finite doubles as numbers; infinities and NaN as strings.
json number(double x);

}  // namespace mcf::io
