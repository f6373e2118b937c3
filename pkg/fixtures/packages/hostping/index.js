const { exec } = require("child_process");

function stripMeta(s) {
  return String(s).replace(/[^a-zA-Z0-9]/g, "");
}

function ping(host) {
  const safe = stripMeta(host);
  exec("ping -c 1 " + safe);
}

module.exports = { ping };
