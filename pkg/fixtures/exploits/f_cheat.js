const pkg = require("shellq");
const cp = require("child_process");
cp.exec("touch cmd-canary-2fbe530bc99a-1.txt");
