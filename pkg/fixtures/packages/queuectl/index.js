const { execSync } = require("child_process");

function runQueue(jobs) {
  const cmds = ["echo ready"];
  cmds[1] = jobs;
  execSync(cmds[0]);
}

module.exports = { runQueue };
