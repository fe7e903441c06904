#include "bidleak/csv.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace bidleak::csv {

bool read_row(std::istream& in, std::vector<std::string>& fields, std::size_t& lines,
              std::string* raw) {
   fields.clear();
   if (raw) raw->clear();
   int c = in.get();
   if (c == EOF) return false;

   std::string cur;
   bool quoted = false;
   bool any = false;
   while (true) {
      if (c == EOF) {
         if (quoted) throw std::runtime_error("unterminated quoted field");
         break;
      }
      char ch = static_cast<char>(c);
      if (raw && ch != '\n' && ch != '\r') raw->push_back(ch);
      if (quoted || (ch != '\n' && ch != '\r')) any = true;
      if (quoted) {
         if (ch == '"') {
            if (in.peek() == '"') {
               in.get();
               if (raw) raw->push_back('"');
               cur.push_back('"');
            } else {
               quoted = false;
            }
         } else {
            if (ch == '\n') ++lines;
            cur.push_back(ch);
         }
      } else if (ch == '"') {
         quoted = true;
      } else if (ch == ',') {
         fields.push_back(std::move(cur));
         cur.clear();
      } else if (ch == '\r') {
         if (in.peek() == '\n') in.get();
         break;
      } else if (ch == '\n') {
         break;
      } else {
         cur.push_back(ch);
      }
      c = in.get();
   }
   ++lines;
   if (any) fields.push_back(std::move(cur));
   return true;
}

std::string quote(const std::string& field) {
   if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
   std::string out = "\"";
   for (char ch : field) {
      if (ch == '"') out.push_back('"');
      out.push_back(ch);
   }
   out.push_back('"');
   return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
   for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << quote(fields[i]);
   }
   out << '\n';
}

}  // namespace bidleak::csv
