const { exec } = require("child_process");

function run(cmd) {
  exec("ls " + cmd);
}

module.exports = { run };
