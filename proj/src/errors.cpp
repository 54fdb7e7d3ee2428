#include "fleet/errors.hpp"

namespace fleet {

void fail_contract(const std::string& msg) { throw contract_error(msg); }
void fail_io(const std::string& msg) { throw io_error(msg); }

}  // namespace fleet
