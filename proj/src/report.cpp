#include "zipvc/report.hpp"

#include "zipvc/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <memory>

namespace zipvc {

using json = nlohmann::ordered_json;

namespace {

std::string shortest(double x) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

InputDigest digest_input(const std::filesystem::path& path) {
  return {path.filename().string(), sha256_file(path)};
}

json to_json(const RunManifest& manifest) {
  json doc;
  doc["command"] = manifest.command;
  doc["options"] = manifest.options;
  json inputs = json::array();
  for (const auto& d : manifest.inputs) inputs.push_back(json{{"file", d.path}, {"sha256", d.sha256}});
  doc["inputs"] = std::move(inputs);
  doc["version"] = manifest.version;
  doc["seed"] = manifest.seed;
  return doc;
}

json to_json(const TestReport& report, const RunManifest& manifest) {
  json doc;
  doc["p_pi"] = report.p_pi;
  doc["p_lambda"] = report.p_lambda;
  doc["p_min"] = report.p_min;
  doc["p_fisher"] = report.p_fisher;
  doc["p_std"] = report.p_std;
  doc["q_pi"] = report.q_pi;
  doc["q_lambda"] = report.q_lambda;
  doc["q_std"] = report.q_std;
  doc["sigma2_pi"] = report.sigma2_pi;
  doc["sigma2_lambda"] = report.sigma2_lambda;
  doc["n"] = report.n;
  doc["p"] = report.p;
  doc["q"] = report.q;
  doc["K"] = report.k;
  doc["B"] = report.replicates;
  doc["seed"] = report.seed;
  doc["basis"] = report.basis;
  doc["warnings"] = report.warnings;
  json m = to_json(manifest);
  m["diagnostics"] = json{{"refit_failures", report.refit_failures},
                          {"null_fit_iterations", report.null_fit_iterations},
                          {"empirical_pvalue_rule", "(1 + count) / (B + 1)"}};
  doc["manifest"] = std::move(m);
  return doc;
}

json to_json(const PruneReport& report, const std::vector<std::string>& names, const RunManifest& manifest) {
  auto name = [&](Index j) {
    return j < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(j)] : std::to_string(j);
  };
  json doc;
  doc["threshold"] = report.threshold;
  json kept = json::array();
  for (Index j : report.kept) kept.push_back(name(j));
  doc["kept"] = std::move(kept);
  json dropped = json::array();
  for (const auto& d : report.dropped) {
    dropped.push_back(json{{"snp", name(d.index)},
                           {"correlated_with", name(d.correlated_with)},
                           {"correlation", d.correlation}});
  }
  doc["dropped"] = std::move(dropped);
  doc["manifest"] = to_json(manifest);
  return doc;
}

std::string pvalue_line(const TestReport& report) {
  return shortest(report.p_pi) + '\t' + shortest(report.p_lambda) + '\t' + shortest(report.p_min) + '\t' +
         shortest(report.p_fisher) + '\t' + shortest(report.p_std);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

}  // namespace zipvc
