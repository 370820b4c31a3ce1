#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "fadv/evaluation.hpp"

namespace fadv {

using Json = nlohmann::ordered_json;

namespace detail {

inline void write_lines(const std::string& path, const std::vector<Json>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw IoError("failed writing report: " + path);
}

}  // namespace detail

/// One JSON object per epoch, line-delimited, after a schema header record.
/// Wall-clock timings go to a separate sidecar so report bytes stay
/// reproducible across runs.
inline void write_train_report(const std::string& path, const TrainReport& report,
                               const TrainConfig& cfg) {
  std::vector<Json> records;
  records.push_back(Json{{"schema", "fadv.train-report.v1"},
                         {"mode", to_string(cfg.mode)},
                         {"inner", to_string(cfg.inner_method)},
                         {"epochs", cfg.epochs},
                         {"seed", cfg.seed},
                         {"checkpoint_id", report.checkpoint_id},
                         {"batches_total", report.batches_total},
                         {"batches_with_clean_term", report.batches_with_clean_term}});
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const EpochStats& s = report.epochs[i];
    Json rec{{"epoch", i + 1},
             {"loss", s.loss},
             {"loss_clean", s.loss_clean},
             {"loss_adv", s.loss_adv},
             {"loss_friendly", s.loss_friendly}};
    rec["dev_acc"] = s.dev_acc.has_value() ? Json(*s.dev_acc) : Json(nullptr);
    records.push_back(std::move(rec));
  }
  detail::write_lines(path, records);
}

inline void write_timing_sidecar(const std::string& path, const TrainReport& report) {
  std::vector<Json> records;
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    records.push_back(Json{{"epoch", i + 1}, {"seconds", report.epochs[i].seconds}});
  }
  detail::write_lines(path, records);
}

inline Json to_json(const AttackEvalEntry& e) {
  return Json{{"attack", e.name},
              {"p_max", e.cfg.p_max},
              {"eps_min", e.cfg.eps_min},
              {"k_syn", e.cfg.k_syn},
              {"max_queries", e.cfg.max_queries},
              {"ra", e.ra},
              {"asr", e.asr},
              {"mean_queries", e.mean_queries},
              {"clean_sample_acc", e.clean_sample_acc},
              {"n_eval", e.n_eval},
              {"n_attacked", e.n_attacked},
              {"n_success", e.n_success},
              {"n_clean_miss", e.n_clean_miss},
              {"total_queries", e.total_queries}};
}

/// Schema-versioned line-delimited records: one header, one line per attack
/// variant. #Query counts every model forward the attacker issues, including
/// the importance-ranking probes.
inline void write_defense_report(const std::string& path, const DefenseReport& report) {
  std::vector<Json> records;
  records.push_back(Json{{"schema", "fadv.defense-report.v1"},
                         {"defense", report.defense},
                         {"checkpoint_id", report.checkpoint_id},
                         {"clean_acc", report.clean_acc},
                         {"n_clean_eval", report.n_clean_eval},
                         {"sample_seed", report.sample_seed},
                         {"query_counting", "all attacker forward calls"}});
  for (const auto& e : report.attacks) records.push_back(to_json(e));
  detail::write_lines(path, records);
}

inline void write_defense_csv(const std::string& path, const DefenseReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write csv: " + path);
  out << "defense,attack,clean,ra,asr,mean_queries\n";
  char buf[256];
  for (const auto& e : report.attacks) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.3f\n",
                  report.defense.c_str(), e.name.c_str(), report.clean_acc, e.ra, e.asr,
                  e.mean_queries);
    out << buf;
  }
  if (!out) throw IoError("failed writing csv: " + path);
}

inline void write_figure1_report(const std::string& json_path, const std::string& csv_path,
                                 const Figure1Report& fig) {
  std::vector<Json> records;
  records.push_back(Json{{"schema", "fadv.figure1.v1"},
                         {"ada_attack_successes", fig.ada_attack_successes},
                         {"fada_attack_successes", fig.fada_attack_successes}});
  records.push_back(Json{{"model", "natural"}, {"train_acc_own", nullptr},
                         {"test_acc", fig.natural_test}});
  records.push_back(Json{{"model", "ada_only"}, {"train_acc_own", fig.ada_train_own},
                         {"test_acc", fig.ada_test}});
  records.push_back(Json{{"model", "fada_only"}, {"train_acc_own", fig.fada_train_own},
                         {"test_acc", fig.fada_test}});
  detail::write_lines(json_path, records);

  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write csv: " + csv_path);
  char buf[256];
  csv << "model,train_acc_own,test_acc\n";
  std::snprintf(buf, sizeof(buf), "natural,,%.6f\n", fig.natural_test);
  csv << buf;
  std::snprintf(buf, sizeof(buf), "ada_only,%.6f,%.6f\n", fig.ada_train_own, fig.ada_test);
  csv << buf;
  std::snprintf(buf, sizeof(buf), "fada_only,%.6f,%.6f\n", fig.fada_train_own,
                fig.fada_test);
  csv << buf;
}

inline void write_sweep_report(const std::string& json_path, const std::string& csv_path,
                               const SweepResult& result) {
  std::vector<Json> records;
  records.push_back(Json{{"schema", "fadv.sweep.v1"}, {"kind", to_string(result.kind)}});
  for (const auto& row : result.rows) {
    records.push_back(
        Json{{"setting", row.setting}, {"clean", row.clean}, {"ra", row.ra}});
  }
  detail::write_lines(json_path, records);

  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write csv: " + csv_path);
  csv << "kind,setting,clean,ra\n";
  char buf[256];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.6f,%.6f\n", to_string(result.kind),
                  row.setting, row.clean, row.ra);
    csv << buf;
  }
}

}  // namespace fadv
