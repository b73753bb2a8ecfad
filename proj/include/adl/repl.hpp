#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "adl/session.hpp"

namespace adl {

// Line-oriented interpreter over a Session. Plain lines are program text and
// are accumulated until they parse; lines starting with ':' are commands.
class Repl {
 public:
  Repl(Session& session, std::ostream& out);

  // Reads until end of input or `:quit`. With `prompt`, prints `adl> `.
  void run(std::istream& in, bool prompt = false);
  // One command or complete program; `in` supplies continuation lines for
  // `:edit`. Returns false on `:quit`.
  bool execute(const std::string& line, std::istream& in);

  std::uint64_t max_steps = 100000;

 private:
  void program(const std::string& text);
  void command(const std::string& name, const std::string& arg, std::istream& in);
  void report_bindings(const std::map<std::string, ValueId>& before);
  void print_error(const std::exception& e);
  std::string describe(const Value& v) const;
  Value named(const std::string& name) const;

  Session& session_;
  std::ostream& out_;
  bool tracing_ = false;
};

}  // namespace adl
