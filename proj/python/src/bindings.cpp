#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polyrand/characterization.hpp"
#include "polyrand/charfun.hpp"
#include "polyrand/cli.hpp"
#include "polyrand/distribution.hpp"
#include "polyrand/error.hpp"
#include "polyrand/parallel.hpp"
#include "polyrand/quadform.hpp"
#include "polyrand/vinogradov.hpp"

namespace py = pybind11;
using namespace polyrand;

namespace {

template <class E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table) {
  for (auto& [name, value] : table)
    if (s == name) return value;
  throw InvalidInput("unknown option '" + s + "'");
}

vinogradov::IkOptions ik_options(const std::string& method, std::size_t n_mc, std::size_t n_inner,
                                 double importance_scale, std::uint64_t seed) {
  vinogradov::IkOptions o;
  o.method = parse_enum<vinogradov::IkMethod>(method, {{"box_plain", vinogradov::IkMethod::box_plain},
                                                       {"box_stratified", vinogradov::IkMethod::box_stratified},
                                                       {"importance", vinogradov::IkMethod::importance},
                                                       {"unit_cell_quadrature",
                                                        vinogradov::IkMethod::unit_cell_quadrature}});
  o.n_mc = n_mc;
  o.n_inner = n_inner;
  o.importance_scale = importance_scale;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Characteristic functionals of polynomials of random variables.";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<Infeasible>(m, "Infeasible", PyExc_RuntimeError);

  m.def("set_jobs", &set_jobs, py::arg("jobs"));

  py::class_<ComplexEstimate>(m, "ComplexEstimate")
      .def_readonly("value", &ComplexEstimate::value)
      .def_readonly("std_error", &ComplexEstimate::std_error)
      .def_readonly("n_samples", &ComplexEstimate::n_samples)
      .def("__repr__", [](const ComplexEstimate& e) {
        return "ComplexEstimate(" + py::repr(py::cast(e.value)).cast<std::string>() + " +- " +
               std::to_string(e.std_error) + ")";
      });

  py::class_<EnvelopeRow>(m, "EnvelopeRow")
      .def_readonly("abscissa", &EnvelopeRow::abscissa)
      .def_readonly("statistic", &EnvelopeRow::statistic)
      .def_readonly("lower", &EnvelopeRow::lower)
      .def_readonly("upper", &EnvelopeRow::upper)
      .def_readonly("passed", &EnvelopeRow::pass)
      .def_readonly("extra", &EnvelopeRow::extra);

  py::class_<EnvelopeReport>(m, "EnvelopeReport")
      .def_readonly("suite", &EnvelopeReport::suite)
      .def_readonly("abscissa_name", &EnvelopeReport::abscissa_name)
      .def_readonly("extra_columns", &EnvelopeReport::extra_columns)
      .def_readonly("rows", &EnvelopeReport::rows)
      .def_readonly("notes", &EnvelopeReport::notes)
      .def_property_readonly("metrics",
                             [](const EnvelopeReport& r) {
                               py::dict d;
                               for (auto& [k, v] : r.metrics) d[py::str(k)] = v;
                               return d;
                             })
      .def("all_pass", &EnvelopeReport::all_pass)
      .def("min_statistic", &EnvelopeReport::min_statistic)
      .def("max_statistic", &EnvelopeReport::max_statistic)
      .def("to_csv", &EnvelopeReport::to_csv)
      .def("to_json", &EnvelopeReport::to_json);

  py::class_<Distribution>(m, "Distribution")
      .def_property_readonly("name", &Distribution::name)
      .def_property_readonly("symmetric", &Distribution::symmetric)
      .def("sample", &Distribution::sample, py::arg("n"), py::arg("seed") = 0)
      .def(
          "cf",
          [](const Distribution& d, double t) -> std::optional<std::complex<double>> {
            if (!d.exact_cf()) return std::nullopt;
            return (*d.exact_cf())(t);
          },
          py::arg("t"));

  auto laws_m = m.def_submodule("laws", "Built-in laws.");
  laws_m.def("point_mass", &laws::point_mass, py::arg("x"));
  laws_m.def("normal", &laws::normal, py::arg("mean") = 0.0, py::arg("sd") = 1.0);
  laws_m.def("uniform", &laws::uniform, py::arg("lo"), py::arg("hi"));
  laws_m.def("lattice_uniform", &laws::lattice_uniform, py::arg("lo"), py::arg("hi"));
  laws_m.def("rademacher", &laws::rademacher);
  laws_m.def("cantor", &laws::cantor);
  laws_m.def("cantor_power", &laws::cantor_power, py::arg("copies"));
  laws_m.def("laplace", &laws::laplace, py::arg("scale") = 1.0);
  laws_m.def("root_exponential", &laws::root_exponential);
  laws_m.def(
      "discrete",
      [](const std::vector<std::pair<double, double>>& atoms) {
        std::vector<Atom> a;
        for (auto [x, p] : atoms) a.push_back({x, p});
        return laws::discrete(std::move(a));
      },
      py::arg("atoms"));
  laws_m.def("counterexample", &characterization::counterexample_sampler, py::arg("base"), py::arg("c"));

  // Characteristic functions.
  m.def("cantor_cf", &charfun::cantor_cf, py::arg("t"), py::arg("tol") = 1e-14);
  m.def("cantor_cramer_scan", &charfun::cantor_cramer_scan, py::arg("t_min"), py::arg("t_max"), py::arg("step"),
        py::arg("tol"), py::arg("bound") = charfun::kCantorCramerBound);
  m.def(
      "gaussian_monomial_cf",
      [](int k, double t, const std::string& method, std::size_t n_samples, std::uint64_t seed) {
        auto mm = parse_enum<charfun::MonomialMethod>(method, {{"closed_form", charfun::MonomialMethod::closed_form},
                                                               {"quadrature", charfun::MonomialMethod::quadrature},
                                                               {"monte_carlo", charfun::MonomialMethod::monte_carlo}});
        return charfun::gaussian_monomial_cf(k, t, mm, n_samples, seed);
      },
      py::arg("k"), py::arg("t"), py::arg("method") = "quadrature", py::arg("n_samples") = 1'000'000,
      py::arg("seed") = 0);
  m.def(
      "cf_monomial_empirical",
      [](const Distribution& d, int degree, int n, double t, std::size_t n_samples, std::uint64_t seed) {
        return charfun::cf_empirical(d, Polynomial1D::monomial(degree), n, {}, t, n_samples, seed);
      },
      py::arg("dist"), py::arg("degree"), py::arg("n"), py::arg("t"), py::arg("n_samples"), py::arg("seed") = 0,
      "E exp{i t S^degree} for the normalized sum S of n draws.");
  m.def("cantor_power_threshold", &charfun::cantor_power_threshold, py::arg("epsilon"));

  // Mean values.
  m.def(
      "weyl_sum",
      [](long long P, std::vector<double> coeffs) {
        return vinogradov::weyl_sum(P, VinogradovPolynomial(std::move(coeffs)));
      },
      py::arg("P"), py::arg("coeffs"));
  m.def(
      "jk_count",
      [](int P, int mm, int k, const std::string& method) {
        auto cm = parse_enum<vinogradov::CountMethod>(
            method, {{"enumerate", vinogradov::CountMethod::enumerate},
                     {"signature_histogram", vinogradov::CountMethod::signature_histogram}});
        return vinogradov::jk_count(P, mm, k, cm).count;
      },
      py::arg("P"), py::arg("m"), py::arg("k"), py::arg("method") = "signature_histogram");
  m.def(
      "vinogradov_constants",
      [](int mm, int tau) {
        auto c = vinogradov::vinogradov_constants(mm, tau);
        return py::make_tuple(c.delta, c.log_c);
      },
      py::arg("m"), py::arg("tau"), "Returns (Delta, log c_tau).");
  m.def(
      "ik_estimate",
      [](const Distribution& S, double P, int mm, int k, const std::string& method, std::size_t n_mc,
         std::size_t n_inner, double importance_scale, std::uint64_t seed) {
        auto e = vinogradov::ik_estimate(S, P, mm, k, ik_options(method, n_mc, n_inner, importance_scale, seed));
        return py::make_tuple(e.value, e.std_error);
      },
      py::arg("S"), py::arg("P"), py::arg("m"), py::arg("k"), py::arg("method") = "box_stratified",
      py::arg("n_mc") = 100'000, py::arg("n_inner") = 20'000, py::arg("importance_scale") = 0.5, py::arg("seed") = 0,
      "Returns (estimate, standard error).");
  m.def("remark3_check", &vinogradov::remark3_check, py::arg("P"), py::arg("m"), py::arg("k"));

  // Gaussian quadratic forms in Hilbert space; specs travel as JSON text.
  m.def("noncentral_fk", &quadform::noncentral_fk, py::arg("u"), py::arg("k"), py::arg("sigma1_sq"),
        py::arg("lam"));
  m.def(
      "tilt_weight",
      [](const std::string& spec) {
        auto t = quadform::tilt_weight(quadform::HilbertGaussianSpec::from_json(spec));
        py::dict d;
        d["W"] = t.W;
        d["ER"] = t.ER;
        d["u0"] = t.u0;
        d["u_star"] = t.u_star;
        d["u_double_star"] = t.u_double_star;
        return d;
      },
      py::arg("spec"));
  m.def(
      "density_p",
      [](const std::string& spec, double u, const std::string& method, std::size_t n_mc, std::uint64_t seed) {
        quadform::DensityParams p;
        p.n_mc = n_mc;
        p.seed = seed;
        auto dm = parse_enum<quadform::DensityMethod>(
            method, {{"cf_inversion", quadform::DensityMethod::cf_inversion}, {"mc_kde", quadform::DensityMethod::mc_kde}});
        auto r = quadform::density_p(quadform::HilbertGaussianSpec::from_json(spec), u, dm, p);
        return py::make_tuple(r.value, r.error);
      },
      py::arg("spec"), py::arg("u"), py::arg("method") = "cf_inversion", py::arg("n_mc") = 1'000'000,
      py::arg("seed") = 0, "Returns (density, error estimate).");
  m.def(
      "tail_prob",
      [](const std::string& spec, double r) {
        auto t = quadform::tail_prob(quadform::HilbertGaussianSpec::from_json(spec), r,
                                     quadform::TailMethod::survival_inversion);
        return py::make_tuple(t.value, t.error);
      },
      py::arg("spec"), py::arg("r"), "P(|Y - a| > r) and its error estimate.");
  m.def(
      "verify_theorem15",
      [](const std::string& spec, const std::vector<double>& u) {
        return quadform::verify_theorem15(quadform::HilbertGaussianSpec::from_json(spec), u);
      },
      py::arg("spec"), py::arg("u_grid"));

  // Characterization by quadratic forms.
  m.def(
      "classify",
      [](const std::vector<std::vector<double>>& A) {
        return characterization::to_string(characterization::classify(characterization::SymmetricQuadraticForm(A)).label);
      },
      py::arg("matrix"));
  m.def(
      "quad_moments_normal",
      [](const std::vector<std::vector<double>>& A, int N) {
        return characterization::quad_moments(characterization::SymmetricQuadraticForm(A),
                                              characterization::MomentSequence::standard_normal(2 * N), N)
            .moments.values;
      },
      py::arg("matrix"), py::arg("N"), "E[Q^j], j = 1..N, for standard normal coordinates.");
  m.def(
      "cp_distance",
      [](const std::vector<std::vector<double>>& A, const Distribution& d1, const Distribution& d2,
         const std::vector<double>& t, std::size_t n_samples, std::uint64_t seed) {
        characterization::CpOptions o;
        o.n_samples = n_samples;
        o.seed = seed;
        return characterization::cp_distance(characterization::SymmetricQuadraticForm(A), d1, d2, t, o);
      },
      py::arg("matrix"), py::arg("dist1"), py::arg("dist2"), py::arg("t_grid"), py::arg("n_samples") = 200'000,
      py::arg("seed") = 0);

  // Whole CLI suites in-process.
  m.def("suite_names", &cli::suite_names);
  m.def(
      "run_suite",
      [](const std::string& suite, const std::string& params, std::uint64_t seed, const std::string& format,
         unsigned jobs) {
        cli::RunConfig c;
        c.suite = suite;
        try {
          c.params = nlohmann::json::parse(params);
        } catch (const nlohmann::json::exception& ex) {
          throw InvalidInput(std::string("params: ") + ex.what());
        }
        c.seed = seed;
        c.format = format == "json" ? cli::Format::json : cli::Format::csv;
        c.jobs = jobs;
        auto out = [&] {
          py::gil_scoped_release release;
          return cli::run(c);
        }();
        return py::make_tuple(out.exit_code, out.artifact, out.summary);
      },
      py::arg("suite"), py::arg("params") = "{}", py::arg("seed") = 0, py::arg("format") = "csv", py::arg("jobs") = 1,
      "Returns (exit_code, artifact, summary).");
}
