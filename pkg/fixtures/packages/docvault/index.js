const fs = require("fs");
const path = require("path");

function fetchDoc(name) {
  const rel = path.join(__dirname, "docs", name);
  return fs.readFileSync(rel, "utf8");
}

module.exports = { fetchDoc };
